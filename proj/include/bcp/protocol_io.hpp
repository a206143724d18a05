#pragma once

#include <string>
#include <string_view>

#include "bcp/combinators.hpp"
#include "bcp/protocol.hpp"

namespace bcp {

// Line-oriented protocol description:
//   states:      s1 s2 ...
//   globals:     g1 g2 ...          (optional; states then read local@global)
//   inputs:      x -> s1, y -> s2
//   accepting:   s1 s3
//   transitions:                    (silent transitions are omitted)
//   q -> r ; a -> b, c -> d
// NondetSpec files add a transitions2 section, RendezvousSpec files a
// rendezvous section with lines "q , r -> s , t".
std::string print_protocol(const ProtocolSpec& spec);
ProtocolSpec parse_protocol(std::string_view text);

std::string print_nondet(const NondetSpec& nd);
NondetSpec parse_nondet(std::string_view text);

std::string print_rendezvous(const RendezvousSpec& rs);
RendezvousSpec parse_rendezvous(std::string_view text);

ProtocolSpec load_protocol(const std::string& path);
NondetSpec load_nondet(const std::string& path);
RendezvousSpec load_rendezvous(const std::string& path);
void save_text(const std::string& path, std::string_view text);
std::string load_text(const std::string& path);

} // namespace bcp
