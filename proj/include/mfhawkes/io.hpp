#ifndef MFHAWKES_IO_HPP
#define MFHAWKES_IO_HPP

#include <iosfwd>
#include <string>

#include "mfhawkes/types.hpp"

namespace mfhawkes {

/// Shortest round-trip decimal form of a double ("inf", "-inf", "nan" for non-finite).
std::string format_double(double v);

/// Header "N,T,seed" and its values, then "component,time" rows sorted by time.
void write_event_paths(std::ostream& os, const EventPaths& paths);
EventPaths read_event_paths(std::istream& is);

/// "t,x0,...,x{n_max}" then one row per grid point.
void write_measure_flow(std::ostream& os, const MeasureFlow& flow);
MeasureFlow read_measure_flow(std::istream& is);

/// "t,value".
void write_mean_path(std::ostream& os, const MeanPath& path);
MeanPath read_mean_path(std::istream& is);

/// "t,x0,...,x{n_max},tail", one row per cell (t is the cell start).
void write_tilt_field(std::ostream& os, const TiltField& tilt);
TiltField read_tilt_field(std::istream& is);

}  // namespace mfhawkes

#endif  // MFHAWKES_IO_HPP
