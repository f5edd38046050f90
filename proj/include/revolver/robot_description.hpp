#pragma once

#include <stdexcept>
#include <string>

#include "revolver/kinematic_tree.hpp"

namespace revolver {

struct ParseError : std::runtime_error {
    ParseError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", col " +
                             std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

// Line-oriented robot description:
//   body <name> parent=<name|none> length=<x,y,z> mass=<kg> inertia=<ix,iy,iz>
//   joint child=<name> axis=<x,y,z> motor=<gain> damping=<d> range=<lo,hi>
// Blank lines and '#' comments are ignored. The returned tree keeps the
// declaration order of bodies and joints and is fully validated.
KinematicTree parse_robot_description(const std::string& text);

KinematicTree load_robot_file(const std::string& path);

// Inverse of the parser; numbers are printed with enough digits to round-trip.
std::string serialize_robot_description(const KinematicTree& tree);

}  // namespace revolver
