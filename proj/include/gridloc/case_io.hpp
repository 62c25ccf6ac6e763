#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gridloc/errors.hpp"

namespace gridloc {

enum class BusType { PQ, PV, Slack };

struct RawBus {
    int id = 0;
    BusType type = BusType::PQ;
    double injection = 0.0; // per-unit net active power (gen - load) / base
    bool operator==(const RawBus&) const = default;
};

struct RawBranch {
    int from = 0;
    int to = 0;
    double x = 0.0; // per-unit reactance
    bool in_service = true;
    bool operator==(const RawBranch&) const = default;
};

// A grid description as read from disk. Parallel in-service branches between
// the same bus pair are merged at parse time into one equivalent line with
// x = (sum 1/x_i)^-1; each merge is noted in `warnings`.
struct RawCase {
    double base_mva = 100.0;
    std::vector<RawBus> buses;
    std::vector<RawBranch> branches;
    std::vector<std::string> warnings; // not part of value identity

    bool operator==(const RawCase& o) const {
        return base_mva == o.base_mva && buses == o.buses && branches == o.branches;
    }

    // Throws ValidationError on duplicate bus ids, dangling branch endpoints,
    // more than one slack bus, or non-positive reactance on an in-service branch.
    void validate() const;
};

// MATPOWER-style case text. Reads baseMVA, bus, branch and (optionally) gen
// tables; everything else is ignored.
RawCase parse_matpower_case(const std::string& text);
RawCase parse_matpower_case(std::istream& in);

// Native structured format (JSON document, see serialize_native).
RawCase parse_native_case(const std::string& text);
RawCase parse_native_case(std::istream& in);

// Deterministic output: buses sorted by id, branches in stored order.
// parse_native_case(serialize_native(c)) == c for every valid case.
std::string serialize_native(const RawCase& c);

// Dispatch by file extension: ".m" -> MATPOWER, anything else -> native.
RawCase load_case_file(const std::string& path);

} // namespace gridloc
