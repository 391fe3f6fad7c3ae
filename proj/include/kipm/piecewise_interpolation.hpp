#pragma once

// Piecewise kernel interpolant: one independent local interpolant per kd-tree
// leaf, evaluated only inside its own box.

#include <kipm/direct_interpolation.hpp>
#include <kipm/ensemble.hpp>
#include <kipm/kd_tree.hpp>
#include <kipm/kernels.hpp>

#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kipm
{

inline constexpr std::size_t default_box_capacity = 200;

/// A local solve failed; carries the leaf's box.
class leaf_fit_error: public std::runtime_error
{
public:
    leaf_fit_error( const box &b, const std::string &what ):
        std::runtime_error( describe(b) + ": " + what ), bounds_ { b }
    {}

    const box& bounds() const noexcept { return bounds_; }

private:
    static std::string describe( const box &b )
    {
        std::ostringstream s;
        s.precision(17);
        s << "local fit in box [" << b.x_lo << ", " << b.x_hi << ") x ["
          << b.v_lo << ", " << b.v_hi << ") failed";
        return s.str();
    }

    box bounds_;
};

inline kd_tree build_tree( const particle_ensemble &ensemble, std::size_t n_box )
{
    return kd_tree::build( ensemble.x(), ensemble.v(), ensemble.period(), ensemble.v_max(), n_box );
}

class piecewise_interpolant
{
public:
    /**
     * Fits every leaf of tree independently. Leaves touching x = 0 or x = L
     * also receive periodic ghost copies of their own particles.
     */
    piecewise_interpolant( const particle_ensemble &ensemble, kd_tree tree,
                           const kernel_spec &k, double mu = default_tikhonov_mu ):
        tree_ { std::move(tree) }, spec_ { k }, L_ { ensemble.period() }, v_max_ { ensemble.v_max() }
    {
        const auto leaves = tree_.leaves();
        const std::size_t n_leaves = leaves.size();
        std::vector<std::optional<direct_interpolant>> fitted( n_leaves );
        std::vector<std::string> errors( n_leaves );
        const auto tol = duplicate_tolerance::for_domain( L_, v_max_ );

        #pragma omp parallel for schedule(dynamic,1)
        for ( std::size_t l = 0; l < n_leaves; ++l )
        {
            const auto &leaf = tree_.at( leaves[l] );
            try
            {
                node_set nodes;
                for ( std::size_t i: leaf.particles )
                    nodes.push_back( ensemble.x()[i], ensemble.v()[i], ensemble.values()[i] );
                if ( leaf.bounds.x_lo <= 0 || leaf.bounds.x_hi >= L_ )
                    nodes = with_periodic_ghosts( std::move(nodes), L_, spec_.sigma_x );
                fitted[l].emplace( std::move(nodes), spec_, mu, L_, tol );
            }
            catch ( const std::exception &e )
            {
                errors[l] = e.what();
            }
        }

        for ( std::size_t l = 0; l < n_leaves; ++l )
            if ( !fitted[l] ) throw leaf_fit_error( tree_.at( leaves[l] ).bounds, errors[l] );

        local_.reserve( n_leaves );
        for ( auto &f: fitted ) local_.push_back( std::move(*f) );
    }

    /// Builds the tree and fits in one go.
    piecewise_interpolant( const particle_ensemble &ensemble, const kernel_spec &k,
                           double mu = default_tikhonov_mu,
                           std::size_t n_box = default_box_capacity ):
        piecewise_interpolant( ensemble, build_tree( ensemble, n_box ), k, mu )
    {}

    const kd_tree& tree() const noexcept { return tree_; }
    const kernel_spec& spec() const noexcept { return spec_; }
    double period() const noexcept { return L_; }
    double v_max() const noexcept { return v_max_; }

    /// Local interpolant of the leaf with the given rank in tree().leaves().
    const direct_interpolant& local( std::size_t rank ) const { return local_.at(rank); }

    /// Value of the leaf containing z; zero for |v| > v_max.
    double operator()( phase_point z ) const
    {
        const double x = wrap_position( z.x, L_ );
        const std::size_t leaf = tree_.find_leaf( x, z.v );
        if ( leaf == kd_tree::none ) return 0;
        return local_[ tree_.leaf_rank(leaf) ].evaluate_unwrapped( { x, z.v } );
    }

    /// Integral of the interpolant over v at x, summed box by box.
    double integrate_v( double x ) const
    {
        x = wrap_position( x, L_ );
        double sum = 0;
        tree_.for_each_leaf_on_line( x, [&]( std::size_t node )
        {
            const box &b = tree_.at(node).bounds;
            sum += local_[ tree_.leaf_rank(node) ].integrate_v_clipped( x, b.v_lo, b.v_hi );
        });
        return sum;
    }

    /// rho(x) = 1 - integral of f over v at every requested position.
    std::vector<double> integrate_density( std::span<const double> xs ) const
    {
        std::vector<double> rho( xs.size() );
        #pragma omp parallel for schedule(static)
        for ( std::size_t i = 0; i < xs.size(); ++i )
            rho[i] = 1 - integrate_v( xs[i] );
        return rho;
    }

private:
    kd_tree tree_;
    kernel_spec spec_;
    double L_;
    double v_max_;
    std::vector<direct_interpolant> local_;
};

}
