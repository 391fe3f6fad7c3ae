#pragma once

// kd-tree subdivision of the phase-space box [0, L) x [-v_max, v_max] with the
// cyclic splitting rule (x at the root, then v, then x, ...).

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace kipm
{

enum class axis { x = 0, v = 1 };

/// Axis-aligned box [x_lo, x_hi) x [v_lo, v_hi).
struct box
{
    double x_lo, x_hi;
    double v_lo, v_hi;

    bool contains_x( double x ) const noexcept { return x_lo <= x && x < x_hi; }
    bool contains_v( double v ) const noexcept { return v_lo <= v && v < v_hi; }
};

class kd_tree
{
public:
    static constexpr std::size_t none = static_cast<std::size_t>(-1);

    struct node
    {
        box         bounds;
        axis        split_axis  = axis::x;
        double      split_value = 0;
        std::size_t left  = none;
        std::size_t right = none;
        std::size_t depth = 0;
        std::vector<std::size_t> particles {};   // leaves only

        bool is_leaf() const noexcept { return left == none; }
    };

    kd_tree() = default;

    /**
     * Recursive median split until every node holds at most n_box particles.
     * The split value is the midpoint between the two sorted coordinates that
     * straddle the median; if they coincide the nearest gap between distinct
     * coordinates is used, so that equal coordinates never end up on
     * different sides. Particles outside the root box in v (they may leave
     * it during a run) are assigned by sorted order like all others.
     */
    static kd_tree build( std::span<const double> x, std::span<const double> v,
                          double L, double v_max, std::size_t n_box )
    {
        if ( x.size() != v.size() ) throw std::invalid_argument( "kd_tree: length mismatch" );
        if ( x.empty() )   throw std::invalid_argument( "kd_tree: no particles" );
        if ( n_box < 2 )   throw std::invalid_argument( "kd_tree: N_box must be at least 2" );

        kd_tree tree;
        tree.L_ = L;
        tree.v_max_ = v_max;
        std::vector<std::size_t> all( x.size() );
        std::iota( all.begin(), all.end(), std::size_t(0) );
        tree.nodes_.push_back( node { box { 0, L, -v_max, v_max } } );
        tree.split( 0, std::move(all), axis::x, x, v, n_box );
        for ( std::size_t i = 0; i < tree.nodes_.size(); ++i )
            if ( tree.nodes_[i].is_leaf() ) tree.leaves_.push_back(i);
        return tree;
    }

    const node& root() const { return nodes_.front(); }
    const node& at( std::size_t i ) const { return nodes_.at(i); }
    std::size_t node_count() const noexcept { return nodes_.size(); }

    /// Node indices of all leaves, ascending.
    std::span<const std::size_t> leaves() const noexcept { return leaves_; }

    std::size_t depth() const noexcept
    {
        std::size_t d = 0;
        for ( const node &n: nodes_ ) d = std::max( d, n.depth );
        return d;
    }

    /// Position of a leaf in leaves() for the given node index.
    std::size_t leaf_rank( std::size_t node_index ) const
    {
        auto it = std::lower_bound( leaves_.begin(), leaves_.end(), node_index );
        if ( it == leaves_.end() || *it != node_index ) throw std::out_of_range( "kd_tree: not a leaf" );
        return std::size_t( it - leaves_.begin() );
    }

    bool in_root( double x, double v ) const noexcept
    {
        return 0 <= x && x < L_ && -v_max_ <= v && v <= v_max_;
    }

    /// Node index of the leaf whose half-open box contains (x, v), or none
    /// outside the root box. The top edge v = v_max belongs to the root.
    std::size_t find_leaf( double x, double v ) const noexcept
    {
        if ( !in_root(x,v) ) return none;
        std::size_t i = 0;
        while ( !nodes_[i].is_leaf() )
        {
            const node &n = nodes_[i];
            const double c = n.split_axis == axis::x ? x : v;
            i = c < n.split_value ? n.left : n.right;
        }
        return i;
    }

    /// Calls fn(node_index) for every leaf whose box meets the line {x} x R.
    template <typename Fn>
    void for_each_leaf_on_line( double x, Fn &&fn ) const
    {
        if ( !(0 <= x && x < L_) ) return;
        visit_line( 0, x, fn );
    }

private:
    template <typename Fn>
    void visit_line( std::size_t i, double x, Fn &fn ) const
    {
        const node &n = nodes_[i];
        if ( n.is_leaf() ) { fn(i); return; }
        if ( n.split_axis == axis::v )
        {
            visit_line( n.left, x, fn );
            visit_line( n.right, x, fn );
        }
        else
        {
            visit_line( x < n.split_value ? n.left : n.right, x, fn );
        }
    }

    void split( std::size_t self, std::vector<std::size_t> idx, axis dim,
                std::span<const double> x, std::span<const double> v, std::size_t n_box )
    {
        if ( idx.size() <= n_box )
        {
            nodes_[self].particles = std::move(idx);
            return;
        }

        for ( int attempt = 0; attempt < 2; ++attempt )
        {
            const std::span<const double> c = dim == axis::x ? x : v;
            std::sort( idx.begin(), idx.end(), [c]( std::size_t a, std::size_t b )
            {
                return c[a] < c[b] || ( c[a] == c[b] && a < b );
            });

            const std::size_t k = split_position( idx, c );
            if ( k != 0 )
            {
                const box   parent = nodes_[self].bounds;
                const double lo = dim == axis::x ? parent.x_lo : parent.v_lo;
                const double hi = dim == axis::x ? parent.x_hi : parent.v_hi;
                const double s  = std::clamp( 0.5*( c[idx[k-1]] + c[idx[k]] ), lo, hi );

                box lbox = parent, rbox = parent;
                if ( dim == axis::x ) { lbox.x_hi = s; rbox.x_lo = s; }
                else                  { lbox.v_hi = s; rbox.v_lo = s; }

                std::vector<std::size_t> lidx( idx.begin(), idx.begin() + std::ptrdiff_t(k) );
                std::vector<std::size_t> ridx( idx.begin() + std::ptrdiff_t(k), idx.end() );
                idx.clear();
                idx.shrink_to_fit();

                const std::size_t depth = nodes_[self].depth + 1;
                const std::size_t l = nodes_.size();
                nodes_.push_back( node { lbox } );
                nodes_.back().depth = depth;
                const std::size_t r = nodes_.size();
                nodes_.push_back( node { rbox } );
                nodes_.back().depth = depth;

                nodes_[self].split_axis  = dim;
                nodes_[self].split_value = s;
                nodes_[self].left  = l;
                nodes_[self].right = r;

                const axis next = dim == axis::x ? axis::v : axis::x;
                split( l, std::move(lidx), next, x, v, n_box );
                split( r, std::move(ridx), next, x, v, n_box );
                return;
            }
            dim = dim == axis::x ? axis::v : axis::x;
        }

        // All coordinates coincide in both dimensions; cannot split further.
        nodes_[self].particles = std::move(idx);
    }

    // Smallest-distance k to n/2 with c[idx[k-1]] < c[idx[k]]; 0 if none exists.
    static std::size_t split_position( const std::vector<std::size_t> &idx, std::span<const double> c )
    {
        const std::size_t n = idx.size(), m = n/2;
        for ( std::size_t d = 0; d <= m; ++d )
        {
            for ( std::size_t k: { m - d, m + d } )
                if ( k >= 1 && k < n && c[idx[k-1]] < c[idx[k]] ) return k;
        }
        return 0;
    }

    std::vector<node> nodes_;
    std::vector<std::size_t> leaves_;
    double L_ = 0;
    double v_max_ = 0;
};

}
