#include "averl/record.hpp"

#include <cstdio>
#include <sstream>

#include "averl/errors.hpp"

namespace averl {

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string record_to_csv(const RunRecord& record, bool deep_columns) {
    std::ostringstream out;
    out << "step,eval_avg_reward,u_tilde,seed";
    if (deep_columns) out << ",loss,target_syncs";
    out << "\n";
    for (const EvalPoint& p : record.points) {
        out << p.step << ',' << fmt_double(p.eval_avg_reward) << ',';
        if (p.u_tilde) out << fmt_double(*p.u_tilde);
        out << ',' << record.seed;
        if (deep_columns) {
            out << ',';
            if (p.loss) out << fmt_double(*p.loss);
            out << ',';
            if (p.target_syncs) out << *p.target_syncs;
        }
        out << "\n";
    }
    return out.str();
}

RunRecord record_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("run CSV: empty document");
    const auto header = split(line, ',');
    if (header.size() < 4 || header[0] != "step" || header[1] != "eval_avg_reward" ||
        header[2] != "u_tilde" || header[3] != "seed")
        throw ParseError("run CSV: unexpected header '" + line + "'");
    const bool deep = header.size() >= 6;

    RunRecord record;
    bool seed_set = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw ParseError("run CSV: row has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        EvalPoint p;
        p.step = std::stoll(cells[0]);
        p.eval_avg_reward = std::stod(cells[1]);
        if (!cells[2].empty()) p.u_tilde = std::stod(cells[2]);
        if (!seed_set) {
            record.seed = std::stoull(cells[3]);
            seed_set = true;
        }
        if (deep) {
            if (!cells[4].empty()) p.loss = std::stod(cells[4]);
            if (!cells[5].empty()) p.target_syncs = std::stoll(cells[5]);
        }
        if (!record.points.empty() && p.step <= record.points.back().step)
            throw ParseError("run CSV: steps are not strictly increasing");
        record.points.push_back(p);
    }
    return record;
}

}  // namespace averl
