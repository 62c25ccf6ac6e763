#include "gridloc/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gridloc {

namespace {

const char* bus_type_name(BusType t) {
    switch (t) {
        case BusType::PQ: return "PQ";
        case BusType::PV: return "PV";
        case BusType::Slack: return "slack";
    }
    return "PQ";
}

BusType bus_type_from_name(const std::string& s) {
    if (s == "PQ") return BusType::PQ;
    if (s == "PV") return BusType::PV;
    if (s == "slack") return BusType::Slack;
    throw ParseError("unknown bus type '" + s + "'");
}

struct NumRow {
    std::vector<double> values;
    int line = 0;
};

// Strip '%' comments, keep track of line numbers.
std::vector<std::pair<std::string, int>> logical_lines(const std::string& text) {
    std::vector<std::pair<std::string, int>> out;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto pct = line.find('%');
        if (pct != std::string::npos) line.erase(pct);
        out.emplace_back(line, no);
    }
    return out;
}

// Locates "<...>.<name> = [" and parses the numeric rows until the closing "]".
// Rows are terminated by ';'. Returns empty vector if the table is absent.
std::vector<NumRow> extract_table(const std::vector<std::pair<std::string, int>>& lines,
                                  const std::string& name, bool* found) {
    *found = false;
    std::vector<NumRow> rows;
    const std::string needle = "." + name;
    size_t i = 0;
    for (; i < lines.size(); ++i) {
        const std::string& s = lines[i].first;
        auto p = s.find(needle);
        if (p == std::string::npos) continue;
        // require "<needle> <ws>* = <ws>* ["
        auto rest = s.substr(p + needle.size());
        size_t q = 0;
        while (q < rest.size() && std::isspace(static_cast<unsigned char>(rest[q]))) ++q;
        if (q >= rest.size() || rest[q] != '=') continue;
        ++q;
        while (q < rest.size() && std::isspace(static_cast<unsigned char>(rest[q]))) ++q;
        if (q >= rest.size() || rest[q] != '[') continue;
        *found = true;
        break;
    }
    if (!*found) return rows;

    // everything after '[' on this line, then subsequent lines until ']'
    std::string buf;
    {
        const std::string& s = lines[i].first;
        buf = s.substr(s.find('[', s.find(needle)) + 1);
    }
    int cur_line = lines[i].second;
    auto flush_row = [&](const std::string& row_text, int line_no) {
        std::istringstream rs(row_text);
        NumRow row;
        row.line = line_no;
        double v;
        while (rs >> v) row.values.push_back(v);
        if (!rs.eof()) throw ParseError("malformed numeric row in table '" + name + "'", line_no);
        if (!row.values.empty()) rows.push_back(std::move(row));
    };
    bool closed = false;
    while (true) {
        auto close = buf.find(']');
        std::string chunk = close == std::string::npos ? buf : buf.substr(0, close);
        // rows inside the chunk are separated by ';'
        size_t start = 0;
        while (true) {
            auto semi = chunk.find(';', start);
            if (semi == std::string::npos) break;
            flush_row(chunk.substr(start, semi - start), cur_line);
            start = semi + 1;
        }
        if (close != std::string::npos) {
            // trailing row without ';' before ']'
            flush_row(chunk.substr(start), cur_line);
            closed = true;
            break;
        }
        // whatever is left belongs to a row continued on the next line
        std::string rem = chunk.substr(start);
        ++i;
        if (i >= lines.size()) break;
        buf = rem + " " + lines[i].first;
        cur_line = lines[i].second;
    }
    if (!closed) throw ParseError("unterminated table '" + name + "'");
    return rows;
}

void check_width(const std::vector<NumRow>& rows, const std::string& name, size_t min_cols) {
    if (rows.empty()) return;
    const size_t width = rows.front().values.size();
    if (width < min_cols)
        throw ParseError("table '" + name + "' has " + std::to_string(width) +
                             " columns, need at least " + std::to_string(min_cols),
                         rows.front().line);
    for (const auto& r : rows)
        if (r.values.size() != width)
            throw ParseError("row has " + std::to_string(r.values.size()) +
                                 " columns, table '" + name + "' has " + std::to_string(width),
                             r.line);
}

// Merge parallel in-service branches into one equivalent line.
void merge_parallel(RawCase& c) {
    std::map<std::pair<int, int>, size_t> first_seen;
    std::vector<RawBranch> merged;
    merged.reserve(c.branches.size());
    for (const auto& b : c.branches) {
        if (!b.in_service) {
            merged.push_back(b);
            continue;
        }
        auto key = std::minmax(b.from, b.to);
        auto it = first_seen.find(key);
        if (it == first_seen.end()) {
            first_seen.emplace(key, merged.size());
            merged.push_back(b);
        } else {
            RawBranch& dst = merged[it->second];
            dst.x = 1.0 / (1.0 / dst.x + 1.0 / b.x);
            c.warnings.push_back("merged parallel branch " + std::to_string(b.from) + "-" +
                                 std::to_string(b.to) + " into equivalent reactance " +
                                 std::to_string(dst.x));
        }
    }
    c.branches = std::move(merged);
}

} // namespace

void RawCase::validate() const {
    std::set<int> ids;
    int slack_count = 0;
    for (const auto& b : buses) {
        if (!ids.insert(b.id).second)
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::Slack) ++slack_count;
    }
    if (slack_count > 1)
        throw ValidationError("more than one slack bus (" + std::to_string(slack_count) + ")");
    for (const auto& br : branches) {
        if (!ids.count(br.from) || !ids.count(br.to))
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " references unknown bus");
        if (br.from == br.to)
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " is a self-loop");
        if (br.in_service && !(br.x > 0.0))
            throw ValidationError("in-service branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " has non-positive reactance");
    }
}

RawCase parse_matpower_case(const std::string& text) {
    auto lines = logical_lines(text);

    RawCase c;
    // baseMVA
    {
        bool got = false;
        for (const auto& [s, no] : lines) {
            auto p = s.find("baseMVA");
            if (p == std::string::npos) continue;
            auto eq = s.find('=', p);
            if (eq == std::string::npos) continue;
            std::istringstream vs(s.substr(eq + 1));
            double v;
            if (!(vs >> v)) throw ParseError("cannot read baseMVA value", no);
            c.base_mva = v;
            got = true;
            break;
        }
        if (!got) throw ParseError("missing section: baseMVA");
    }

    bool found = false;
    auto bus_rows = extract_table(lines, "bus", &found);
    if (!found) throw ParseError("missing section: bus");
    check_width(bus_rows, "bus", 3);

    auto branch_rows = extract_table(lines, "branch", &found);
    if (!found) throw ParseError("missing section: branch");
    check_width(branch_rows, "branch", 4);

    auto gen_rows = extract_table(lines, "gen", &found); // optional
    if (found) check_width(gen_rows, "gen", 2);

    std::map<int, size_t> index_of;
    for (const auto& row : bus_rows) {
        RawBus b;
        b.id = static_cast<int>(row.values[0]);
        const int type = static_cast<int>(row.values[1]);
        b.type = type == 3 ? BusType::Slack : type == 2 ? BusType::PV : BusType::PQ;
        b.injection = -row.values[2] / c.base_mva; // load draws power
        if (index_of.count(b.id))
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        index_of[b.id] = c.buses.size();
        c.buses.push_back(b);
    }
    for (const auto& row : gen_rows) {
        const int bus_id = static_cast<int>(row.values[0]);
        auto it = index_of.find(bus_id);
        if (it == index_of.end())
            throw ValidationError("gen at unknown bus " + std::to_string(bus_id));
        c.buses[it->second].injection += row.values[1] / c.base_mva;
    }
    for (const auto& row : branch_rows) {
        RawBranch br;
        br.from = static_cast<int>(row.values[0]);
        br.to = static_cast<int>(row.values[1]);
        br.x = row.values[3];
        br.in_service = row.values.size() >= 11 ? row.values[10] != 0.0 : true;
        c.branches.push_back(br);
    }

    merge_parallel(c);
    c.validate();
    return c;
}

RawCase parse_matpower_case(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_matpower_case(ss.str());
}

namespace {

using nlohmann::json;

double require_number(const json& j, const char* field, const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_number())
        throw ParseError(ctx + ": missing or non-numeric field '" + field + "'");
    return j[field].get<double>();
}

} // namespace

RawCase parse_native_case(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid document: ") + e.what());
    }
    RawCase c;
    c.base_mva = require_number(j, "base_mva", "case");
    if (!j.contains("buses") || !j["buses"].is_array())
        throw ParseError("case: missing field 'buses'");
    if (!j.contains("branches") || !j["branches"].is_array())
        throw ParseError("case: missing field 'branches'");
    for (size_t i = 0; i < j["buses"].size(); ++i) {
        const auto& jb = j["buses"][i];
        const std::string ctx = "bus " + std::to_string(i);
        RawBus b;
        b.id = static_cast<int>(require_number(jb, "id", ctx));
        if (!jb.contains("type") || !jb["type"].is_string())
            throw ParseError(ctx + ": missing field 'type'");
        b.type = bus_type_from_name(jb["type"].get<std::string>());
        b.injection = require_number(jb, "injection", ctx);
        c.buses.push_back(b);
    }
    for (size_t i = 0; i < j["branches"].size(); ++i) {
        const auto& jb = j["branches"][i];
        const std::string ctx = "branch " + std::to_string(i);
        RawBranch br;
        br.from = static_cast<int>(require_number(jb, "from", ctx));
        br.to = static_cast<int>(require_number(jb, "to", ctx));
        br.x = require_number(jb, "x", ctx);
        br.in_service = require_number(jb, "status", ctx) != 0.0;
        c.branches.push_back(br);
    }
    merge_parallel(c);
    c.validate();
    return c;
}

RawCase parse_native_case(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_native_case(ss.str());
}

std::string serialize_native(const RawCase& c) {
    c.validate();
    json j;
    j["base_mva"] = c.base_mva;
    auto buses = c.buses;
    std::sort(buses.begin(), buses.end(), [](const RawBus& a, const RawBus& b) { return a.id < b.id; });
    j["buses"] = json::array();
    for (const auto& b : buses) {
        j["buses"].push_back({{"id", b.id},
                              {"type", bus_type_name(b.type)},
                              {"injection", b.injection}});
    }
    j["branches"] = json::array();
    for (const auto& br : c.branches) {
        j["branches"].push_back({{"from", br.from},
                                 {"to", br.to},
                                 {"x", br.x},
                                 {"status", br.in_service ? 1 : 0}});
    }
    return j.dump(2) + "\n";
}

RawCase load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m")
        return parse_matpower_case(ss.str());
    return parse_native_case(ss.str());
}

} // namespace gridloc
