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

#include "rispos/keyvalue.hpp"

#include <charconv>
#include <sstream>

namespace rispos
{

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_float(float v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace
{

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size())
    {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

template <typename V>
V parse_number(std::string_view token, const std::string &key, const std::string &origin)
{
    V v{};
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw KeyValueError(origin + ": key '" + key + "': cannot parse '" + std::string(token) + "'");
    return v;
}

} // namespace

KeyValues KeyValues::parse(std::string_view text, std::string origin)
{
    KeyValues kv;
    kv.origin_ = std::move(origin);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw KeyValueError(kv.origin_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty())
            throw KeyValueError(kv.origin_ + ":" + std::to_string(line_no) + ": empty key");
        if (kv.values_.count(key))
            throw KeyValueError(kv.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        kv.values_[key] = value;
        kv.order_.push_back(key);
    }
    return kv;
}

const std::string &KeyValues::raw(const std::string &key)
{
    const auto it = values_.find(key);
    if (it == values_.end())
        throw KeyValueError(origin_ + ": missing key '" + key + "'");
    consumed_.insert(key);
    return it->second;
}

double KeyValues::get_double(const std::string &key)
{
    return parse_number<double>(trim(raw(key)), key, origin_);
}

std::int64_t KeyValues::get_int(const std::string &key)
{
    return parse_number<std::int64_t>(trim(raw(key)), key, origin_);
}

std::uint64_t KeyValues::get_uint(const std::string &key)
{
    return parse_number<std::uint64_t>(trim(raw(key)), key, origin_);
}

std::vector<double> KeyValues::get_doubles(const std::string &key, std::size_t expected)
{
    std::vector<double> out;
    for (auto tok : split_ws(raw(key)))
        out.push_back(parse_number<double>(tok, key, origin_));
    if (expected && out.size() != expected)
        throw KeyValueError(origin_ + ": key '" + key + "' expects " + std::to_string(expected) + " values, got " +
                            std::to_string(out.size()));
    return out;
}

std::vector<std::int64_t> KeyValues::get_ints(const std::string &key, std::size_t expected)
{
    std::vector<std::int64_t> out;
    for (auto tok : split_ws(raw(key)))
        out.push_back(parse_number<std::int64_t>(tok, key, origin_));
    if (expected && out.size() != expected)
        throw KeyValueError(origin_ + ": key '" + key + "' expects " + std::to_string(expected) + " values, got " +
                            std::to_string(out.size()));
    return out;
}

void KeyValues::require_all_consumed() const
{
    for (const auto &key : order_)
        if (!consumed_.count(key))
            throw KeyValueError(origin_ + ": unknown key '" + key + "'");
}

void KeyValues::set(const std::string &key, std::string value)
{
    if (!values_.count(key))
        order_.push_back(key);
    values_[key] = std::move(value);
}

std::string KeyValues::serialize() const
{
    std::ostringstream os;
    for (const auto &key : order_)
        os << key << " = " << values_.at(key) << '\n';
    return os.str();
}

} // namespace rispos
