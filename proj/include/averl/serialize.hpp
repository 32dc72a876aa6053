#pragma once

#include <string>

#include "averl/mdp.hpp"

namespace averl {

/// MDP document format:
///   {"num_states": n, "num_actions": m,
///    "kernel": [[[ [s_next, reward, prob], ... ] per action ] per state]}
/// Loading validates the kernel and throws ValidationError with the full
/// violation report on failure; malformed JSON throws ParseError.
TabularMdp parse_mdp_json(const std::string& text);
TabularMdp load_mdp_file(const std::string& path);
std::string mdp_to_json(const TabularMdp& mdp);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit content digest, printed as 16 hex digits. Used for config
/// hashes and record digests in experiment manifests.
std::string content_digest(const std::string& bytes);

}  // namespace averl
