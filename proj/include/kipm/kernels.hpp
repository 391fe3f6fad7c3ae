#pragma once

// Compactly supported Wendland functions in one variable and the tensorised
// phase-space kernel built from them.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace kipm
{

/// A point (x, v) in phase space.
struct phase_point
{
    double x;
    double v;
};

/**
 * One-dimensional Wendland function b(r) = (1-r)_+^p q(r).
 *
 * order 2: (1-r)^3 (3r + 1)           C^2 when extended evenly
 * order 4: (1-r)^5 (8r^2 + 5r + 1)    C^4 when extended evenly
 *
 * The antiderivative is kept as monomial coefficients computed once here, so
 * that integrals over v are evaluated exactly instead of by quadrature.
 */
class wendland_function
{
public:
    explicit wendland_function( int order = 2 ): order_ { order }
    {
        if ( order == 2 )
        {
            power_  = 3;
            factor_ = { 1, 3, 0 };
        }
        else if ( order == 4 )
        {
            power_  = 5;
            factor_ = { 1, 5, 8 };
        }
        else
        {
            throw std::invalid_argument( "wendland_function: unsupported kernel order "
                                         + std::to_string(order) + " (expected 2 or 4)" );
        }

        // Expand (1-r)^p q(r) into monomials; all products are small integers.
        std::array<double,max_degree + 1> mono {};
        mono[0] = 1;
        std::size_t deg = 0;
        for ( int i = 0; i < power_; ++i )
        {
            for ( std::size_t k = deg + 1; k-- > 0; )
                mono[k+1] -= mono[k];
            ++deg;
        }
        std::array<double,max_degree + 1> prod {};
        for ( std::size_t i = 0; i <= deg; ++i )
            for ( std::size_t j = 0; j < factor_.size(); ++j )
                if ( factor_[j] != 0 ) prod[i+j] += mono[i]*factor_[j];
        degree_ = deg + 2;
        while ( degree_ > 0 && prod[degree_] == 0 ) --degree_;

        anti_.fill(0);
        for ( std::size_t k = 0; k <= degree_; ++k )
            anti_[k+1] = prod[k] / double(k+1);

        total_ = antiderivative_poly(1.0);
    }

    int order() const noexcept { return order_; }

    /// b(r) for r >= 0; vanishes for r >= 1.
    double operator()( double r ) const
    {
        if ( !(r >= 0) ) throw std::domain_error( "wendland_function: negative radius" );
        return value_unchecked(r);
    }

    /// Hot-path evaluation, caller guarantees r >= 0.
    double value_unchecked( double r ) const noexcept
    {
        if ( r >= 1 ) return 0;
        const double s = 1 - r;
        double sp = s*s*s;
        if ( power_ == 5 ) sp *= s*s;
        return sp * ( factor_[0] + r*( factor_[1] + r*factor_[2] ) );
    }

    /// Antiderivative with b' = b normalised to vanish at 0; constant for r >= 1.
    double antiderivative( double r ) const
    {
        if ( !(r >= 0) ) throw std::domain_error( "wendland_function: negative radius" );
        return r >= 1 ? total_ : antiderivative_poly(r);
    }

    /// Integral of b over [0, 1].
    double half_integral() const noexcept { return total_; }

    /// sign(t) * antiderivative(min(|t|, 1)), the antiderivative of b(|t|) on the line.
    double signed_antiderivative( double t ) const noexcept
    {
        const double a = std::abs(t);
        const double val = a >= 1 ? total_ : antiderivative_poly(a);
        return t < 0 ? -val : val;
    }

private:
    static constexpr std::size_t max_degree = 8;

    double antiderivative_poly( double r ) const noexcept
    {
        double acc = 0;
        for ( std::size_t k = degree_ + 1; k > 0; --k )
            acc = acc*r + anti_[k];
        return acc*r;
    }

    int order_;
    int power_ = 3;
    std::array<double,3> factor_ {};
    std::array<double,max_degree + 2> anti_ {};
    std::size_t degree_ = 0;
    double total_ = 0;
};

/// Tensorised kernel k((x,v),(x',v')) = b(|x-x'|/sigma_x) b(|v-v'|/sigma_v).
struct kernel_spec
{
    wendland_function radial;
    double sigma_x;
    double sigma_v;

    kernel_spec( wendland_function b, double sx, double sv ):
        radial { b }, sigma_x { sx }, sigma_v { sv }
    {
        if ( !(sx > 0) || !(sv > 0) )
            throw std::invalid_argument( "kernel_spec: scaling parameters must be positive" );
    }

    kernel_spec( int order, double sx, double sv ):
        kernel_spec( wendland_function(order), sx, sv ) {}
};

inline double eval_radial( const wendland_function &b, double r )
{
    return b(r);
}

inline double eval_antiderivative( const wendland_function &b, double r )
{
    return b.antiderivative(r);
}

/// Lambda: the integral of one v-translate of the kernel over the real line.
inline double full_line_integral( const kernel_spec &k ) noexcept
{
    return 2 * k.sigma_v * k.radial.half_integral();
}

/// Integral of b(|s - center|/sigma) for s in [lo, hi].
inline double clipped_integral( const wendland_function &b, double sigma,
                                double center, double lo, double hi ) noexcept
{
    return sigma * ( b.signed_antiderivative( (hi - center)/sigma )
                   - b.signed_antiderivative( (lo - center)/sigma ) );
}

inline double clipped_v_integral( const kernel_spec &k, double center,
                                  double lo, double hi )
{
    if ( lo > hi )
        throw std::invalid_argument( "clipped_v_integral: lower bound exceeds upper bound" );
    return clipped_integral( k.radial, k.sigma_v, center, lo, hi );
}

inline double eval_tensor( const kernel_spec &k, phase_point z, phase_point w ) noexcept
{
    const double bx = k.radial.value_unchecked( std::abs(z.x - w.x) / k.sigma_x );
    if ( bx == 0 ) return 0;
    return bx * k.radial.value_unchecked( std::abs(z.v - w.v) / k.sigma_v );
}

}
