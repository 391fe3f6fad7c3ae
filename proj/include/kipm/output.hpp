#pragma once

// CSV writers for the run outputs. Numbers use the shortest round-trip form.

#include <kipm/benchmarks.hpp>
#include <kipm/config.hpp>

#include <ostream>
#include <span>
#include <string>

namespace kipm
{

inline constexpr const char *amplitude_header   = "t,E_max,E_l2,mass,f_l2,kinetic_energy,field_energy";
inline constexpr const char *convergence_header = "t,h,err_Einf";
inline constexpr const char *exact_error_header = "t,err_Linf";

inline void write_amplitude_csv( std::ostream &os, const diagnostics_series &series )
{
    os << amplitude_header << '\n';
    for ( const auto &r: series )
        os << format_double(r.t) << ',' << format_double(r.e_max) << ',' << format_double(r.e_l2) << ','
           << format_double(r.mass) << ',' << format_double(r.f_l2) << ','
           << format_double(r.kinetic_energy) << ',' << format_double(r.field_energy) << '\n';
}

/// snapshot_t<t>.csv
inline std::string snapshot_file_name( double t )
{
    return "snapshot_t" + format_double(t) + ".csv";
}

inline void write_snapshot_csv( std::ostream &os, const snapshot_grid &s )
{
    os << "# L=" << format_double(s.L) << " vmax=" << format_double(s.v_max)
       << " nx=" << s.nx << " nv=" << s.nv << " reference=" << to_string(s.reference) << '\n';
    for ( std::size_t row = 0; row < s.nv; ++row )
    {
        for ( std::size_t col = 0; col < s.nx; ++col )
        {
            if ( col ) os << ',';
            os << format_double( s.at(row,col) );
        }
        os << '\n';
    }
}

inline void write_convergence_csv( std::ostream &os, std::span<const convergence_row> rows )
{
    os << convergence_header << '\n';
    for ( const auto &r: rows )
        os << format_double(r.t) << ',' << format_double(r.h) << ',' << format_double(r.err_einf) << '\n';
}

inline void write_exact_error_csv( std::ostream &os, std::span<const exact_error_sample> rows )
{
    os << exact_error_header << '\n';
    for ( const auto &r: rows )
        os << format_double(r.t) << ',' << format_double(r.linf) << '\n';
}

}
