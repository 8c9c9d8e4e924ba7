#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "netlist/canonical.hpp"
#include "netlist/netlist.hpp"
#include "oracles.hpp"
#include "util/error.hpp"

using namespace crl;

namespace {

const char* kComponentRow = "[['FET-A-2','5','0'],['FET-B-0','5','OUT'],['FET-A-1','0','IN'],['FET-A-0','5','OUT']]";
const char* kLabelledInvalid = "[['FET-B-1','IN','6'],['FET-A-0','0','IN'],['FET-B-0','OUT','7'],['inductor-0','6','7']]";
const char* kCorrectedExample = "[['FET-B-1','IN','6'],['FET-A-0','0','IN'],['FET-B-0','OUT','0'],['inductor-0','6','OUT']]";
const char* kBuck = "[['FET-B-0','IN','6'],['FET-A-0','6','0'],['inductor-0','6','OUT'],['capacitor-0','OUT','0']]";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

std::multiset<std::string> kinds_of(const std::vector<Violation>& v) {
  std::multiset<std::string> out;
  for (const auto& x : v) out.insert(std::string(violation_name(x.kind)) + ":" + x.detail);
  return out;
}

}  // namespace

TEST_CASE("parse_triple_list reads the component-constraint sample") {
  auto n = parse_triple_list(kComponentRow);
  REQUIRE(n.size() == 4);
  CHECK(n.entries()[0].device == Device{Kind::FetA, 2});
  std::set<std::string> internal, external;
  for (const auto& node : n.nodes()) (node.is_external() ? external : internal).insert(node.str());
  CHECK(internal == std::set<std::string>{"5"});
  CHECK(external == std::set<std::string>{"0", "OUT", "IN"});
}

TEST_CASE("parse_triple_list edge cases") {
  CHECK(parse_triple_list("[]").empty());
  CHECK(parse_triple_list("  [ ]  ").empty());
  auto n = parse_triple_list(kLabelledInvalid);
  CHECK(n.size() == 4);
  std::set<std::string> internal;
  for (const auto& node : n.nodes())
    if (!node.is_external()) internal.insert(node.str());
  CHECK(internal == std::set<std::string>{"6", "7"});
  // double quotes and spacing are accepted
  CHECK(parse_triple_list("[[\"capacitor-0\", \"IN\", \"0\"]]").size() == 1);

  CHECK(code_of([] { parse_triple_list("[['capacitor-0','IN','0']"); }) == ErrorCode::MalformedSyntax);
  CHECK(code_of([] { parse_triple_list("[['resistor-0','IN','0']]"); }) == ErrorCode::UnknownDeviceName);
  CHECK(code_of([] { parse_triple_list("[['capacitor-0','IN']]"); }) == ErrorCode::ArityMismatch);
  CHECK(code_of([] { parse_triple_list("[['FET-A-0','IN','0','OUT']]"); }) == ErrorCode::ArityMismatch);
  CHECK(code_of([] { parse_triple_list("[['capacitor-0','IN','0'],['capacitor-0','OUT','0']]"); }) ==
        ErrorCode::DuplicateDevice);
  CHECK(code_of([] { parse_triple_list("[['capacitor-0','IN','x7']]"); }) == ErrorCode::MalformedSyntax);
  CHECK(code_of([] { parse_triple_list("[['capacitor-0','IN','-3']]"); }) == ErrorCode::MalformedSyntax);
}

TEST_CASE("emit_triple_list") {
  CHECK(emit_triple_list(Netlist{}) == "[]");
  CHECK(emit_triple_list(parse_triple_list(kCorrectedExample)) == kCorrectedExample);
  CHECK(emit_triple_list(parse_triple_list(kComponentRow)) == kComponentRow);
  auto spaced = "[ ['FET-A-2', '5', '0'], ['FET-B-0', '5', 'OUT'] ]";
  CHECK(emit_triple_list(parse_triple_list(spaced)) == "[['FET-A-2','5','0'],['FET-B-0','5','OUT']]");
}

TEST_CASE("triple list round-trips on random netlists") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    auto n = oracle::random_netlist(rng, 1 + i % 10, 12);
    CHECK(parse_triple_list(emit_triple_list(n)) == n);
  }
}

TEST_CASE("encode_incident format") {
  auto buck = parse_triple_list(kBuck);
  auto text = encode_incident(buck, Duty::from_value(0.5));
  CHECK(text ==
        "Node IN connects: FET-B-0:drain.\n"
        "Node OUT connects: inductor-0:neg, capacitor-0:pos.\n"
        "Node 0 connects: FET-A-0:source, capacitor-0:neg.\n"
        "Node 6 connects: FET-B-0:source, FET-A-0:drain, inductor-0:pos.\n"
        "Duty cycle: 0.5.\n");

  auto single = encode_incident(parse_triple_list("[['capacitor-0','IN','0']]"), Duty::from_value(0.1));
  CHECK(single == "Node IN connects: capacitor-0:pos.\nNode 0 connects: capacitor-0:neg.\nDuty cycle: 0.1.\n");

  // Hand trace of the corrected example netlist: node 6 touches FET-B-1 and inductor-0.
  auto corrected = encode_incident(parse_triple_list(kCorrectedExample), Duty::from_value(0.3));
  CHECK(corrected.find("Node 6 connects: FET-B-1:source, inductor-0:pos.\n") != std::string::npos);
  CHECK(code_of([&] { encode_incident(buck, Duty::from_value(0.4)); }) == ErrorCode::InvalidDuty);
}

TEST_CASE("parse_incident inverts encode_incident") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto n = oracle::random_netlist(rng, 1 + i % 10, 10);
    auto d = Duty::from_index(i % 5);
    auto [back, duty] = parse_incident(encode_incident(n, d));
    CHECK(duty == d);
    CHECK(canonical_key(back) == canonical_key(n));
    CHECK(back.size() == n.size());
  }
  CHECK(code_of([] { parse_incident("Node IN connects: capacitor-0:pos.\nNode 0 connects: capacitor-0:neg.\n"); }) ==
        ErrorCode::MalformedSyntax);
  CHECK(code_of([] {
          parse_incident(
              "Node IN connects: FET-A-0:drain.\nNode OUT connects: FET-A-0:source.\n"
              "Node 0 connects: FET-A-0:drain.\nDuty cycle: 0.5.\n");
        }) == ErrorCode::InconsistentIncidence);
  CHECK(code_of([] { parse_incident("Node IN connects: FET-A-0:drain.\nDuty cycle: 0.5.\n"); }) ==
        ErrorCode::InconsistentIncidence);
  CHECK(code_of([] { parse_incident("Node IN connects: capacitor-0:drain.\nDuty cycle: 0.5.\n"); }) ==
        ErrorCode::InconsistentIncidence);
}

TEST_CASE("structural_check rules") {
  // Hand trace of the netlist labelled invalid in the reference examples: IN/OUT/0 present, no self
  // loops, one connected component, nodes 6 and 7 each touched twice.
  CHECK(structural_check(parse_triple_list(kLabelledInvalid)).empty());
  CHECK(structural_check(parse_triple_list(kCorrectedExample)).empty());
  CHECK(structural_check(parse_triple_list(kBuck)).empty());

  auto self = structural_check(parse_triple_list("[['capacitor-0','IN','IN']]"));
  CHECK(kinds_of(self) == std::multiset<std::string>{"SelfLoop:capacitor-0", "MissingPort:OUT", "MissingPort:0"});

  auto empty = structural_check(Netlist{});
  CHECK(kinds_of(empty) ==
        std::multiset<std::string>{"EmptyNetlist:no devices", "MissingPort:IN", "MissingPort:OUT", "MissingPort:0"});

  auto dangling = structural_check(parse_triple_list("[['FET-A-0','IN','3'],['capacitor-0','OUT','0']]"));
  CHECK(kinds_of(dangling) ==
        std::multiset<std::string>{"DanglingInternal:3", "DisconnectedGraph:2 components"});

  // Implied body terminals satisfy the port check: FET-A body is 0, FET-B body is IN.
  auto implied = structural_check(parse_triple_list("[['FET-A-0','OUT','5'],['FET-B-0','5','OUT']]"));
  CHECK(kinds_of(implied).empty());

  auto gate = structural_check(parse_triple_list("[['capacitor-0','IN','GATEN'],['FET-A-0','GATEN','OUT']]"));
  REQUIRE(gate.size() == 1);
  CHECK(gate[0].kind == ViolationKind::ControlNetTerminal);
  CHECK(gate[0].severity == Severity::Warning);
  CHECK_FALSE(has_errors(gate));
}

TEST_CASE("structural_check is order-insensitive") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto n = oracle::random_netlist(rng, 1 + i % 8, 6);
    auto entries = n.entries();
    std::shuffle(entries.begin(), entries.end(), rng);
    CHECK(structural_check(Netlist(entries)) == structural_check(n));
  }
}

TEST_CASE("canonical_key basic examples") {
  auto n = parse_triple_list(kComponentRow);
  auto reversed = parse_triple_list("[['FET-A-0','9','OUT'],['FET-A-1','0','IN'],['FET-B-0','9','OUT'],['FET-A-2','9','0']]");
  CHECK(canonical_key(n) == canonical_key(reversed));
  CHECK(canonical_key(parse_triple_list("[['capacitor-0','IN','0']]")) !=
        canonical_key(parse_triple_list("[['inductor-0','IN','0']]")));
  // Terminal order is significant.
  CHECK(canonical_key(parse_triple_list("[['capacitor-0','IN','0']]")) !=
        canonical_key(parse_triple_list("[['capacitor-0','0','IN']]")));
  CHECK(canonical_key(n) == canonical_key(n));
}

TEST_CASE("canonical_form is a representative") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    auto n = oracle::random_netlist(rng, 1 + i % 10, 10);
    auto rep = canonical_form(n);
    CHECK(canonical_key(rep) == canonical_key(n));
    CHECK(canonical_form(oracle::random_relabel(rng, n)) == rep);
  }
}

TEST_CASE("canonical_key handles highly symmetric netlists quickly") {
  // Ten disjoint capacitor bridges between internal nodes: large automorphism group.
  std::vector<Entry> entries;
  for (int i = 0; i < 10; ++i)
    entries.push_back({Device{Kind::Capacitor, i}, {NodeId::internal(2 * i + 1), NodeId::internal(2 * i + 2)}});
  auto key = canonical_key(Netlist(entries));
  CHECK_FALSE(key.bytes.empty());
  // Star of ten inductors from one internal hub to distinct leaves.
  std::vector<Entry> star;
  for (int i = 0; i < 10; ++i)
    star.push_back({Device{Kind::Inductor, i}, {NodeId::internal(1), NodeId::internal(i + 2)}});
  Netlist s(star);
  std::mt19937_64 rng(1);
  CHECK(canonical_key(oracle::random_relabel(rng, s)) == canonical_key(s));
}

TEST_CASE("canonical classes equal brute-force classes on all <=2-device netlists") {
  // The 3-device sweep runs in the acceptance suite.
  auto all = oracle::enumerate_small(2);
  std::map<std::string, oracle::BruteForm> key_to_form;
  std::map<oracle::BruteForm, std::string> form_to_key;
  for (const auto& n : all) {
    auto key = canonical_key(n).bytes;
    auto form = oracle::brute_force_form(n);
    auto [a, ins_a] = key_to_form.emplace(key, form);
    auto [b, ins_b] = form_to_key.emplace(form, key);
    REQUIRE(a->second == form);
    REQUIRE(b->second == key);
  }
  CHECK(key_to_form.size() == form_to_key.size());
}
