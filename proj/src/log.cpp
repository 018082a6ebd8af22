#include "mirage/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mirage::log {

namespace {

Level parse_threshold() {
    const char* v = std::getenv("MIRAGE_LOG");
    if (!v) return Level::Warn;
    if (std::strcmp(v, "error") == 0) return Level::Error;
    if (std::strcmp(v, "warn") == 0) return Level::Warn;
    if (std::strcmp(v, "info") == 0) return Level::Info;
    if (std::strcmp(v, "debug") == 0) return Level::Debug;
    return Level::Warn;
}

const char* level_tag(Level l) {
    switch (l) {
        case Level::Error: return "error";
        case Level::Warn: return "warn";
        case Level::Info: return "info";
        case Level::Debug: return "debug";
    }
    return "?";
}

}  // namespace

bool enabled(Level l) {
    static const Level threshold = parse_threshold();
    return static_cast<int>(l) <= static_cast<int>(threshold);
}

void write(Level l, const char* fmt, ...) {
    if (!enabled(l)) return;
    std::fprintf(stderr, "[mirage %s] ", level_tag(l));
    va_list ap;
    va_start(ap, fmt);
    std::vfprintf(stderr, fmt, ap);
    va_end(ap);
    std::fputc('\n', stderr);
}

}  // namespace mirage::log
