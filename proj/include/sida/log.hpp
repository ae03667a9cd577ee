#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace sida {

/// Sink for non-fatal diagnostics (non-convergence, constant columns, clamped
/// bounds). Defaults to stderr; tests and the CLI may swap it out.
using WarningSink = std::function<void(const std::string&)>;

namespace detail {
inline WarningSink& warning_sink()
{
    static WarningSink sink = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}
inline std::mutex& warning_mutex()
{
    static std::mutex m;
    return m;
}
inline bool& warnings_muted()
{
    thread_local bool muted = false;
    return muted;
}
} // namespace detail

/// Silences warn() on the current thread for the guard's lifetime.
class MuteWarnings {
public:
    MuteWarnings() : prev_(detail::warnings_muted()) { detail::warnings_muted() = true; }
    ~MuteWarnings() { detail::warnings_muted() = prev_; }
    MuteWarnings(const MuteWarnings&) = delete;
    MuteWarnings& operator=(const MuteWarnings&) = delete;

private:
    bool prev_;
};

inline void set_warning_sink(WarningSink sink)
{
    std::lock_guard lock(detail::warning_mutex());
    detail::warning_sink() = std::move(sink);
}

inline void warn(const std::string& msg)
{
    if (detail::warnings_muted()) return;
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink()) detail::warning_sink()(msg);
}

} // namespace sida
