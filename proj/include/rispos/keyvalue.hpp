// SPDX-License-Identifier: Apache-2.0
//
// rispos - RIS-aided fingerprint positioning toolkit
// Copyright (C) 2026 The rispos authors
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

#ifndef RISPOS_KEYVALUE_HPP
#define RISPOS_KEYVALUE_HPP

// Line-oriented "key = value" text used for config files, dataset manifests
// and checkpoint headers. '#' starts a comment; lists are space separated.
// Floating point values are written in shortest round-trip form.

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rispos
{

class KeyValueError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

std::string format_double(double v);
std::string format_float(float v);

class KeyValues
{
public:
    // `origin` names the source in error messages.
    static KeyValues parse(std::string_view text, std::string origin = "<text>");

    bool has(const std::string &key) const { return values_.count(key) != 0; }

    // Lookups mark the key as consumed.
    const std::string &raw(const std::string &key);
    double get_double(const std::string &key);
    std::int64_t get_int(const std::string &key);
    std::uint64_t get_uint(const std::string &key);
    std::vector<double> get_doubles(const std::string &key, std::size_t expected = 0);
    std::vector<std::int64_t> get_ints(const std::string &key, std::size_t expected = 0);

    // Throws naming the first key nobody asked for.
    void require_all_consumed() const;

    void set(const std::string &key, std::string value);
    std::string serialize() const; // insertion order

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    std::set<std::string> consumed_;
};

} // namespace rispos

#endif
