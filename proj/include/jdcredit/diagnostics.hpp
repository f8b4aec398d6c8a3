#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string_view>

namespace jdcredit {

using WarningSink = std::function<void(std::string_view)>;

namespace detail {

inline std::mutex& warning_mutex()
{
    static std::mutex m;
    return m;
}

inline WarningSink& warning_sink_storage()
{
    static WarningSink sink = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
    return sink;
}

} // namespace detail

/// Replaces the process-wide warning sink; returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink)
{
    std::lock_guard lock(detail::warning_mutex());
    auto previous = std::move(detail::warning_sink_storage());
    detail::warning_sink_storage() = std::move(sink);
    return previous;
}

inline void warn(std::string_view message)
{
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink_storage())
        detail::warning_sink_storage()(message);
}

} // namespace jdcredit
