#pragma once

namespace mirage::log {

// Severity threshold comes from the MIRAGE_LOG environment variable
// (error, warn, info, debug); unset means warn.
enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

bool enabled(Level l);

#if defined(__GNUC__)
__attribute__((format(printf, 2, 3)))
#endif
void write(Level l, const char* fmt, ...);

}  // namespace mirage::log

#define MIRAGE_LOG_ERROR(...) ::mirage::log::write(::mirage::log::Level::Error, __VA_ARGS__)
#define MIRAGE_LOG_WARN(...) ::mirage::log::write(::mirage::log::Level::Warn, __VA_ARGS__)
#define MIRAGE_LOG_INFO(...) ::mirage::log::write(::mirage::log::Level::Info, __VA_ARGS__)
#define MIRAGE_LOG_DEBUG(...) ::mirage::log::write(::mirage::log::Level::Debug, __VA_ARGS__)
