// SPDX-License-Identifier: Apache-2.0
//
// subchain: sub-chain beam codebook design for quantized mmWave phased arrays
// Copyright (C) 2026 The subchain authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace subchain
{
    // Invalid or inconsistent configuration (CLI exit code 2).
    class config_error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Malformed, inconsistent or non-finite input data (CLI exit code 3).
    class data_error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
} // namespace subchain
