// kipm: run the Vlasov-Poisson benchmarks from a configuration file.

#include <kipm/benchmarks.hpp>
#include <kipm/config.hpp>
#include <kipm/output.hpp>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace
{

constexpr int exit_config    = 1;
constexpr int exit_numerical = 2;

kipm::run_config load_config( const std::string &path )
{
    std::ifstream in( path );
    if ( !in ) throw kipm::config_error( 0, "cannot read " + path );
    std::stringstream text;
    text << in.rdbuf();
    return kipm::parse_config( text.str() );
}

void apply_threads( std::size_t threads )
{
#ifdef _OPENMP
    if ( threads > 0 ) omp_set_num_threads( int(threads) );
#else
    (void) threads;
#endif
}

template <typename Writer>
void write_file( const fs::path &path, Writer &&write )
{
    std::ofstream out( path );
    if ( !out ) throw std::runtime_error( "cannot write " + path.string() );
    write( out );
    if ( !out ) throw std::runtime_error( "error while writing " + path.string() );
}

double seconds_since( std::chrono::steady_clock::time_point start )
{
    return std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
}

int cmd_run( const std::string &path )
{
    const kipm::run_config cfg = load_config( path );
    apply_threads( cfg.threads );
    const fs::path dir = cfg.output_dir;
    fs::create_directories( dir );

    const auto start = std::chrono::steady_clock::now();
    const kipm::run_result r = kipm::run( cfg.settings );
    const double wall = seconds_since( start );

    write_file( dir/"amplitude.csv", [&]( std::ostream &o ) { kipm::write_amplitude_csv( o, r.series ); } );
    for ( const auto &s: r.snapshots )
        write_file( dir/kipm::snapshot_file_name( s.t ), [&]( std::ostream &o ) { kipm::write_snapshot_csv( o, s ); } );
    if ( !r.exact_errors.empty() )
        write_file( dir/"exact_error.csv", [&]( std::ostream &o ) { kipm::write_exact_error_csv( o, r.exact_errors ); } );

    if ( r.neutrality_warnings )
        std::fprintf( stderr, "warning: mean density exceeded the neutrality tolerance in %zu field solves\n",
                      r.neutrality_warnings );

    const auto &last = r.series.back();
    std::printf( "t=%s wall=%.3fs E_max=%s\n", kipm::format_double( last.t ).c_str(), wall,
                 kipm::format_double( last.e_max ).c_str() );
    return 0;
}

int cmd_converge( const std::string &path )
{
    const kipm::run_config cfg = load_config( path );
    apply_threads( cfg.threads );
    const fs::path dir = cfg.output_dir;
    fs::create_directories( dir );

    const auto start = std::chrono::steady_clock::now();
    std::vector<kipm::convergence_row> rows;
    try
    {
        rows = kipm::convergence_study( cfg.settings, cfg.converge_resolutions, cfg.reference_resolution );
    }
    catch ( const std::invalid_argument &e )
    {
        throw kipm::config_error( 0, e.what() );
    }
    const double wall = seconds_since( start );

    write_file( dir/"convergence.csv", [&]( std::ostream &o ) { kipm::write_convergence_csv( o, rows ); } );

    double final_err = 0;
    for ( const auto &r: rows )
        if ( r.t == rows.back().t ) final_err = std::max( final_err, r.err_einf );
    std::printf( "t=%s wall=%.3fs err_Einf=%s\n", kipm::format_double( rows.back().t ).c_str(), wall,
                 kipm::format_double( final_err ).c_str() );
    return 0;
}

int cmd_print_defaults( const std::string &case_name, const std::string &method_name )
{
    const auto tag = kipm::parse_case_tag( case_name );
    if ( !tag ) throw kipm::config_error( 0, "unknown case '" + case_name + "'" );
    kipm::method_kind method = kipm::method_kind::pw;
    if ( method_name == "direct" ) method = kipm::method_kind::direct;
    else if ( method_name != "pw" ) throw kipm::config_error( 0, "unknown method '" + method_name + "'" );
    std::cout << kipm::format_config( kipm::run_config::defaults( *tag, method ) );
    return 0;
}

}

int main( int argc, char **argv )
{
    CLI::App app { "Kernel interpolation particle method for 1D-1V Vlasov-Poisson" };
    app.require_subcommand( 1 );

    std::string run_path, converge_path, case_name, method_name = "pw";
    auto *run = app.add_subcommand( "run", "Run a simulation and write amplitude.csv and snapshots" );
    run->add_option( "config", run_path, "Configuration file" )->required();
    auto *converge = app.add_subcommand( "converge", "Run a convergence study and write convergence.csv" );
    converge->add_option( "config", converge_path, "Configuration file" )->required();
    auto *defaults = app.add_subcommand( "print-defaults", "Print the default configuration of a case" );
    defaults->add_option( "case", case_name, "weak_landau, two_stream, bump_on_tail or free_streaming" )->required();
    defaults->add_option( "method", method_name, "pw (default) or direct" );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        const int code = app.exit( e );
        return code == 0 ? 0 : exit_config;
    }

    try
    {
        if ( *run )      return cmd_run( run_path );
        if ( *converge ) return cmd_converge( converge_path );
        return cmd_print_defaults( case_name, method_name );
    }
    catch ( const kipm::config_error &e )
    {
        std::fprintf( stderr, "config error: %s\n", e.what() );
        return exit_config;
    }
    catch ( const kipm::simulation_error &e )
    {
        std::fprintf( stderr, "numerical failure in phase %s: %s\n",
                      std::string( kipm::to_string( e.where() ) ).c_str(), e.what() );
        return exit_numerical;
    }
    catch ( const std::exception &e )
    {
        std::fprintf( stderr, "error: %s\n", e.what() );
        return exit_numerical;
    }
}
