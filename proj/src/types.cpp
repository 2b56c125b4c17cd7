#include "sunny/types.hpp"

#include "sunny/errors.hpp"

namespace sunny {

std::string_view to_string(ProblemKind k) {
  return k == ProblemKind::Csp ? "csp" : "cop";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Minimize: return "min";
    case Direction::Maximize: return "max";
    case Direction::None: return "none";
  }
  return "none";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Sat: return "sat";
    case Outcome::Uns: return "uns";
    case Outcome::Unk: return "unk";
    case Outcome::Opt: return "opt";
    case Outcome::Unb: return "unb";
  }
  return "unk";
}

std::string_view outcome_label(Outcome o) {
  switch (o) {
    case Outcome::Sat: return "SAT";
    case Outcome::Uns: return "UNS";
    case Outcome::Unk: return "UNK";
    case Outcome::Opt: return "OPT";
    case Outcome::Unb: return "UNB";
  }
  return "UNK";
}

ProblemKind parse_kind(std::string_view s) {
  if (s == "csp") return ProblemKind::Csp;
  if (s == "cop") return ProblemKind::Cop;
  throw ParseError("", "unknown problem kind '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  if (s == "min") return Direction::Minimize;
  if (s == "max") return Direction::Maximize;
  if (s == "none") return Direction::None;
  throw ParseError("", "unknown direction '" + std::string(s) + "'");
}

Outcome parse_outcome(std::string_view s) {
  if (s == "sat") return Outcome::Sat;
  if (s == "uns") return Outcome::Uns;
  if (s == "unk") return Outcome::Unk;
  if (s == "opt") return Outcome::Opt;
  if (s == "unb") return Outcome::Unb;
  throw ParseError("", "unknown outcome '" + std::string(s) + "'");
}

bool improves(double challenger, double incumbent, Direction dir) {
  if (dir == Direction::Maximize) return challenger > incumbent;
  return challenger < incumbent;  // Minimize; None never reaches value comparison
}

}  // namespace sunny
