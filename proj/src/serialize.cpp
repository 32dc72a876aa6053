#include "averl/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace averl {

using nlohmann::json;

TabularMdp parse_mdp_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("MDP document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("num_states") || !doc.contains("num_actions") ||
        !doc.contains("kernel"))
        throw ParseError("MDP document: expected object with num_states, num_actions, kernel");

    int num_states = 0, num_actions = 0;
    try {
        num_states = doc.at("num_states").get<int>();
        num_actions = doc.at("num_actions").get<int>();
        TabularMdp::Kernel kernel;
        for (const auto& state_row : doc.at("kernel")) {
            kernel.emplace_back();
            for (const auto& action_row : state_row) {
                std::vector<Outcome> outs;
                for (const auto& triple : action_row) {
                    if (!triple.is_array() || triple.size() != 3)
                        throw ParseError("MDP document: outcome must be [s_next, reward, prob]");
                    outs.push_back(Outcome{triple.at(0).get<int>(), triple.at(1).get<double>(),
                                           triple.at(2).get<double>()});
                }
                kernel.back().push_back(std::move(outs));
            }
        }
        TabularMdp mdp(num_states, num_actions, std::move(kernel));
        auto report = validate(mdp);
        if (!report.empty()) {
            std::string what = "MDP document failed validation:";
            for (const auto& line : report) what += "\n  " + line;
            throw ValidationError(what, std::move(report));
        }
        return mdp;
    } catch (const json::exception& e) {
        throw ParseError(std::string("MDP document: ") + e.what());
    }
}

TabularMdp load_mdp_file(const std::string& path) { return parse_mdp_json(read_text_file(path)); }

std::string mdp_to_json(const TabularMdp& mdp) {
    json kernel = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) {
        json state_row = json::array();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            json action_row = json::array();
            for (const Outcome& o : mdp.outcomes(s, a))
                action_row.push_back(json::array({o.next_state, o.reward, o.prob}));
            state_row.push_back(std::move(action_row));
        }
        kernel.push_back(std::move(state_row));
    }
    json doc = {{"num_states", mdp.num_states()},
                {"num_actions", mdp.num_actions()},
                {"kernel", std::move(kernel)}};
    return doc.dump();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace averl
