#pragma once

#include "wpf/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace wpf::model {

inline constexpr int kModelFormatVersion = 1;

/// Versioned plain-text model file:
///
///   wpf-model <version>
///   [meta]          key=value lines (labels, iterations, sample range, start epoch, config JSON)
///   [thresholds]    speed|power <turbine> <values...>
///   [volatility]    floor/median vectors, one line each
///   [equations]     <equation> <turbine> <lambda> <bic> <columns> <dropped> <degenerate>
///   [terms]         <equation> <turbine> <family> <source> <lag> <threshold> <sign> <basis> <coef>
///   [matrix <name> <rows> <cols>]   dense row-major values
///
/// Doubles use shortest round-trip text, so save/load is exact. The
/// training tracks are stored only for the last rows (the tail needed to
/// start a recursion); after loading, speed_residuals etc. hold that tail.
void save_model(std::ostream& out, const FittedJointModel& model);
void save_model(const std::filesystem::path& path, const FittedJointModel& model);

/// Throws ParseError on malformed content, FileError when unreadable.
FittedJointModel load_model(std::istream& in);
FittedJointModel load_model(const std::filesystem::path& path);

}  // namespace wpf::model
