#ifndef CAUSTICA_IO_FORMAT_HPP
#define CAUSTICA_IO_FORMAT_HPP

#include <cstdio>
#include <string>

namespace caustica {

/// 17-significant-digit float formatting: round-trips doubles exactly and
/// keeps CSV/JSON outputs diffable.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace caustica

#endif
