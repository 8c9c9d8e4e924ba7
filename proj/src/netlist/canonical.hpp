#pragma once

#include <compare>
#include <string>

#include "netlist/netlist.hpp"

namespace crl {

// Relabeling-invariant fingerprint of a topology. Two netlists share a key iff
// one maps onto the other by permuting entries, renumbering device indices
// within a kind and relabeling internal nodes. External ports stay fixed and
// terminal order is significant.
struct CanonicalKey {
  std::string bytes;
  auto operator<=>(const CanonicalKey&) const = default;
};

CanonicalKey canonical_key(const Netlist& n);

// Representative of the isomorphism class: entries in canonical order, device
// indices 0.. per kind, internal nodes 1.. by first appearance.
Netlist canonical_form(const Netlist& n);

}  // namespace crl
