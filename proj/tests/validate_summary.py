#!/usr/bin/env python3
#
# SPDX-FileCopyrightText: Copyright (c) 2026 fdsb contributors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Validates an experiment summary against the published JSON schema."""

import json
import sys

import jsonschema


def main() -> int:
    schema_path, summary_path = sys.argv[1], sys.argv[2]
    with open(schema_path, encoding="utf-8") as f:
        schema = json.load(f)
    with open(summary_path, encoding="utf-8") as f:
        summary = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    jsonschema.Draft202012Validator(schema).validate(summary)
    print(f"{summary_path}: valid")
    return 0


if __name__ == "__main__":
    sys.exit(main())
