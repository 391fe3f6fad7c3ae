#pragma once

// Flat "key = value" run configuration with per-case defaults.

#include <kipm/benchmarks.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace kipm
{

/// Malformed or out-of-range configuration; line() is 0 when not tied to a line.
class config_error: public std::runtime_error
{
public:
    config_error( std::size_t line, const std::string &what ):
        std::runtime_error( line ? "line " + std::to_string(line) + ": " + what : what ), line_ { line }
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline constexpr const char *output_dir_variable = "KIPM_OUTPUT_DIR";

inline std::string default_output_dir()
{
    const char *env = std::getenv( output_dir_variable );
    return env && *env ? std::string(env) : std::string("output");
}

/// Shortest decimal representation that reads back to the same double.
inline std::string format_double( double value )
{
    char buf[64];
    const auto r = std::to_chars( buf, buf + sizeof(buf), value );
    return std::string( buf, r.ptr );
}

struct run_config
{
    simulation_settings settings;
    std::string output_dir = default_output_dir();
    std::size_t threads = 0;                         // 0: all cores
    std::vector<grid_resolution> converge_resolutions;
    grid_resolution reference_resolution;

    bool operator==( const run_config& ) const = default;

    /// The benchmark as run in the reference computations for this method.
    static run_config defaults( case_tag tag, method_kind method = method_kind::pw )
    {
        run_config c;
        simulation_settings &s = c.settings;
        s.problem = benchmark_case::defaults( tag );
        s.method  = method;
        s.t_end   = tag == case_tag::free_streaming ? 1 : 50;

        if ( method == method_kind::pw )
        {
            s.time = { integrator::symplectic_euler, 1.0/16 };
            s.kernel_order = 2; s.sigma_x = 6; s.sigma_v = 3;
            s.nx = 512; s.nv = 512;
            if ( tag == case_tag::two_stream )
            {
                s.nx = 512; s.nv = 1024;
                s.kernel_order = 4; s.sigma_x = 4; s.sigma_v = 2;
                s.time.dt = 1.0/32;
            }
            else if ( tag == case_tag::bump_on_tail )
            {
                s.nx = 1024; s.nv = 512;
            }
            c.converge_resolutions = { {64,64}, {128,128} };
            c.reference_resolution = {256,256};
        }
        else
        {
            s.time = { integrator::rk4, 1.0/8 };
            s.kernel_order = 2; s.sigma_x = 3; s.sigma_v = 1;
            s.nx = 32; s.nv = 32;
            if ( tag == case_tag::two_stream )
            {
                s.nx = 64; s.nv = 128;
                s.kernel_order = 4; s.sigma_x = 2; s.sigma_v = 1;
                s.time.dt = 1.0/4;
            }
            c.converge_resolutions = { {16,16}, {32,32} };
            c.reference_resolution = {64,64};
        }
        if ( tag == case_tag::weak_landau )
            s.snapshot_times = { 0, 10, 20, 30, 40, 50 };
        if ( tag == case_tag::weak_landau || tag == case_tag::free_streaming )
            s.reference = snapshot_reference::maxwellian;
        return c;
    }
};

namespace detail
{

inline std::string_view trim( std::string_view s ) noexcept
{
    const auto first = s.find_first_not_of( " \t\r\n" );
    if ( first == std::string_view::npos ) return {};
    const auto last = s.find_last_not_of( " \t\r\n" );
    return s.substr( first, last - first + 1 );
}

inline std::vector<std::string_view> split_list( std::string_view s )
{
    std::vector<std::string_view> parts;
    if ( trim(s).empty() ) return parts;
    std::size_t start = 0;
    for ( ;; )
    {
        const auto comma = s.find( ',', start );
        parts.push_back( trim( s.substr( start, comma == std::string_view::npos ? comma : comma - start ) ) );
        if ( comma == std::string_view::npos ) break;
        start = comma + 1;
    }
    return parts;
}

class value_reader
{
public:
    value_reader( std::string_view key, std::string_view value, std::size_t line ):
        key_ { key }, value_ { value }, line_ { line }
    {}

    [[noreturn]] void fail( const std::string &what ) const
    {
        throw config_error( line_, std::string(key_) + ": " + what );
    }

    double real( std::string_view text ) const
    {
        double d = 0;
        const auto r = std::from_chars( text.data(), text.data() + text.size(), d );
        if ( r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(d) )
            fail( "expected a number, got '" + std::string(text) + "'" );
        return d;
    }

    std::size_t count( std::string_view text ) const
    {
        std::size_t n = 0;
        if ( !text.empty() && text.front() == '-' ) fail( "must not be negative" );
        const auto r = std::from_chars( text.data(), text.data() + text.size(), n );
        if ( r.ec != std::errc() || r.ptr != text.data() + text.size() )
            fail( "expected a non-negative integer, got '" + std::string(text) + "'" );
        return n;
    }

    grid_resolution resolution( std::string_view text ) const
    {
        const auto sep = text.find( 'x' );
        if ( sep == std::string_view::npos ) fail( "expected NXxNV, got '" + std::string(text) + "'" );
        return { count( trim( text.substr(0, sep) ) ), count( trim( text.substr(sep + 1) ) ) };
    }

    double real() const { return real(value_); }
    std::size_t count() const { return count(value_); }

    double positive() const
    {
        const double d = real();
        if ( !(d > 0) ) fail( "must be positive" );
        return d;
    }

    double non_negative() const
    {
        const double d = real();
        if ( !(d >= 0) ) fail( "must not be negative" );
        return d;
    }

    std::size_t at_least( std::size_t lo ) const
    {
        const std::size_t n = count();
        if ( n < lo ) fail( "must be at least " + std::to_string(lo) );
        return n;
    }

    std::string_view text() const noexcept { return value_; }

private:
    std::string_view key_, value_;
    std::size_t line_;
};

}

/**
 * Parses configuration text. "case" and "method" select the defaults (weak
 * Landau and PW if absent); every other key overrides one field. Each key may
 * appear at most once.
 */
inline run_config parse_config( std::string_view text )
{
    struct entry { std::string_view key, value; std::size_t line; };
    std::vector<entry> entries;
    std::map<std::string_view,std::size_t> seen;

    std::size_t line_no = 0;
    for ( std::size_t pos = 0; pos <= text.size(); )
    {
        const auto eol = text.find( '\n', pos );
        std::string_view line = text.substr( pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos );
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if ( const auto hash = line.find('#'); hash != std::string_view::npos ) line = line.substr( 0, hash );
        line = detail::trim(line);
        if ( line.empty() ) continue;

        const auto eq = line.find('=');
        if ( eq == std::string_view::npos ) throw config_error( line_no, "expected 'key = value'" );
        const auto key = detail::trim( line.substr(0, eq) );
        const auto value = detail::trim( line.substr(eq + 1) );
        if ( key.empty() ) throw config_error( line_no, "missing key" );
        if ( auto [it, fresh] = seen.emplace( key, line_no ); !fresh )
            throw config_error( line_no, std::string(key) + ": duplicate key (first set on line "
                                         + std::to_string(it->second) + ")" );
        entries.push_back( { key, value, line_no } );
    }

    case_tag tag = case_tag::weak_landau;
    method_kind method = method_kind::pw;
    for ( const entry &e: entries )
    {
        if ( e.key == "case" )
        {
            const auto t = parse_case_tag( e.value );
            if ( !t ) throw config_error( e.line, "case: unknown case '" + std::string(e.value) + "'" );
            tag = *t;
        }
        else if ( e.key == "method" )
        {
            if ( e.value == "direct" )  method = method_kind::direct;
            else if ( e.value == "pw" ) method = method_kind::pw;
            else throw config_error( e.line, "method: expected direct or pw, got '" + std::string(e.value) + "'" );
        }
    }

    run_config c = run_config::defaults( tag, method );
    simulation_settings &s = c.settings;
    case_parameters &p = s.problem.params;

    for ( const entry &e: entries )
    {
        const detail::value_reader r( e.key, e.value, e.line );
        const std::string_view k = e.key;

        if      ( k == "case" || k == "method" ) continue;
        else if ( k == "nx" )             s.nx = r.at_least(2);
        else if ( k == "nv" )             s.nv = r.at_least(2);
        else if ( k == "order" )
        {
            const std::size_t o = r.count();
            if ( o != 2 && o != 4 ) r.fail( "kernel order must be 2 or 4" );
            s.kernel_order = int(o);
        }
        else if ( k == "sigma_x" )        s.sigma_x = r.positive();
        else if ( k == "sigma_v" )        s.sigma_v = r.positive();
        else if ( k == "mu" )             s.mu = r.non_negative();
        else if ( k == "n_box" )          s.n_box = r.at_least(2);
        else if ( k == "poisson_cells" )  s.poisson_cells = r.at_least( spline_space::order );
        else if ( k == "integrator" )
        {
            if ( e.value == "rk4" )                   s.time.scheme = integrator::rk4;
            else if ( e.value == "symplectic_euler" ) s.time.scheme = integrator::symplectic_euler;
            else r.fail( "expected rk4 or symplectic_euler" );
        }
        else if ( k == "dt" )             s.time.dt = r.positive();
        else if ( k == "t_end" )          s.t_end = r.non_negative();
        else if ( k == "amplitude_grid" ) s.amplitude_grid = r.at_least(2);
        else if ( k == "moment_grid" )    s.moment_grid = r.count();
        else if ( k == "error_grid" )     s.error_grid = r.at_least(1);
        else if ( k == "snapshot_times" )
        {
            s.snapshot_times.clear();
            for ( auto item: detail::split_list( e.value ) )
            {
                const double t = r.real(item);
                if ( t < 0 ) r.fail( "snapshot times must not be negative" );
                s.snapshot_times.push_back(t);
            }
        }
        else if ( k == "snapshot_nx" )    s.snapshot_nx = r.at_least(1);
        else if ( k == "snapshot_nv" )    s.snapshot_nv = r.at_least(2);
        else if ( k == "snapshot_reference" )
        {
            if ( e.value == "none" )            s.reference = snapshot_reference::none;
            else if ( e.value == "maxwellian" ) s.reference = snapshot_reference::maxwellian;
            else r.fail( "expected none or maxwellian" );
        }
        else if ( k == "output_dir" )
        {
            if ( e.value.empty() ) r.fail( "must not be empty" );
            c.output_dir = std::string( e.value );
        }
        else if ( k == "threads" )        c.threads = r.count();
        else if ( k == "alpha" )
        {
            p.alpha = r.non_negative();
            if ( p.alpha >= 1 ) r.fail( "must be below 1 (f_0 would turn negative)" );
        }
        else if ( k == "k" )              p.k = r.positive();
        else if ( k == "L" )              p.L = r.positive();
        else if ( k == "v_max" )          p.v_max = r.positive();
        else if ( k == "n_p" )            p.n_p = r.non_negative();
        else if ( k == "n_b" )            p.n_b = r.non_negative();
        else if ( k == "v_b" )            p.v_b = r.real();
        else if ( k == "v_t" )            p.v_t = r.positive();
        else if ( k == "converge_resolutions" )
        {
            c.converge_resolutions.clear();
            for ( auto item: detail::split_list( e.value ) )
            {
                const grid_resolution g = r.resolution(item);
                if ( g.nx < 2 || g.nv < 2 ) r.fail( "resolutions need at least 2 cells per direction" );
                c.converge_resolutions.push_back(g);
            }
            if ( c.converge_resolutions.empty() ) r.fail( "need at least one resolution" );
        }
        else if ( k == "reference_resolution" )
        {
            c.reference_resolution = r.resolution( e.value );
            if ( c.reference_resolution.nx < 2 || c.reference_resolution.nv < 2 )
                r.fail( "need at least 2 cells per direction" );
        }
        else throw config_error( e.line, "unknown key '" + std::string(k) + "'" );
    }

    if ( const auto it = seen.find( "snapshot_times" ); it != seen.end() )
    {
        for ( double t: s.snapshot_times )
            if ( t > s.t_end )
                throw config_error( it->second, "snapshot_times: " + format_double(t) + " lies beyond t_end" );
    }
    else
    {
        std::erase_if( s.snapshot_times, [&s]( double t ) { return t > s.t_end; } );
    }
    return c;
}

/// Text that parse_config maps back to exactly c.
inline std::string format_config( const run_config &c )
{
    const simulation_settings &s = c.settings;
    const case_parameters &p = s.problem.params;
    auto list = []( const auto &items, auto fmt )
    {
        std::string out;
        for ( const auto &i: items ) { if ( !out.empty() ) out += ", "; out += fmt(i); }
        return out;
    };
    auto res = []( grid_resolution g ) { return std::to_string(g.nx) + "x" + std::to_string(g.nv); };

    std::ostringstream o;
    o << "case = " << to_string( s.problem.tag ) << "\n"
      << "method = " << to_string( s.method ) << "\n"
      << "\n# resolution and kernel\n"
      << "nx = " << s.nx << "\n"
      << "nv = " << s.nv << "\n"
      << "order = " << s.kernel_order << "\n"
      << "sigma_x = " << format_double( s.sigma_x ) << "\n"
      << "sigma_v = " << format_double( s.sigma_v ) << "\n"
      << "mu = " << format_double( s.mu ) << "\n"
      << "n_box = " << s.n_box << "\n"
      << "poisson_cells = " << s.poisson_cells << "\n"
      << "\n# time stepping\n"
      << "integrator = " << to_string( s.time.scheme ) << "\n"
      << "dt = " << format_double( s.time.dt ) << "\n"
      << "t_end = " << format_double( s.t_end ) << "\n"
      << "\n# diagnostics and output\n"
      << "amplitude_grid = " << s.amplitude_grid << "\n"
      << "moment_grid = " << s.moment_grid << "\n"
      << "error_grid = " << s.error_grid << "\n"
      << "snapshot_times = " << list( s.snapshot_times, format_double ) << "\n"
      << "snapshot_nx = " << s.snapshot_nx << "\n"
      << "snapshot_nv = " << s.snapshot_nv << "\n"
      << "snapshot_reference = " << to_string( s.reference ) << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "threads = " << c.threads << "\n"
      << "\n# case parameters\n"
      << "alpha = " << format_double( p.alpha ) << "\n"
      << "k = " << format_double( p.k ) << "\n"
      << "L = " << format_double( p.L ) << "\n"
      << "v_max = " << format_double( p.v_max ) << "\n"
      << "n_p = " << format_double( p.n_p ) << "\n"
      << "n_b = " << format_double( p.n_b ) << "\n"
      << "v_b = " << format_double( p.v_b ) << "\n"
      << "v_t = " << format_double( p.v_t ) << "\n"
      << "\n# convergence study\n"
      << "converge_resolutions = " << list( c.converge_resolutions, res ) << "\n"
      << "reference_resolution = " << res( c.reference_resolution ) << "\n";
    return o.str();
}

}
