#pragma once
// Item evaluation from indicator effects, applied rule by rule:
//   (a) the item takes the effect of each incoming link
//   (b) + when some effect is + and none is - or ?
//   (c) - when some effect is - and none is + or ?
//   (d) = when every effect is =
//   (e) otherwise the item is left for the prediction phase
// Effects are the strings "+", "-", "=", "?"; the result is one of those or
// "guess".

#include <string>
#include <vector>

namespace oracle {

inline std::string evaluate_item(const std::vector<std::string>& effects) {
  if (effects.empty()) return "guess";
  int plus = 0, minus = 0, zero = 0, unknown = 0;
  for (const auto& e : effects) {
    if (e == "+") ++plus;
    if (e == "-") ++minus;
    if (e == "=") ++zero;
    if (e == "?") ++unknown;
  }
  if (plus > 0 && minus == 0 && unknown == 0) return "+";
  if (minus > 0 && plus == 0 && unknown == 0) return "-";
  if (zero == static_cast<int>(effects.size())) return "=";
  return "guess";
}

}  // namespace oracle
