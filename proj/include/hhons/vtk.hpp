// Legacy-VTK (ASCII v3.0) writer for cell-average velocity and pressure.

#ifndef HHONS_VTK_HPP
#define HHONS_VTK_HPP

#include "hhons/hho.hpp"

#include <iosfwd>
#include <string>

namespace hhons {

void write_vtk(std::ostream& out, const VelocitySpace& space, const HybridVelocity& u,
               const BrokenPressure& p, const std::string& title = "hhons fields");

void write_vtk(const std::string& path, const VelocitySpace& space, const HybridVelocity& u,
               const BrokenPressure& p, const std::string& title = "hhons fields");

} // namespace hhons

#endif
