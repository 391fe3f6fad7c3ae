#pragma once

// Symmetric positive definite matrices and their Cholesky factorisation
// (LAPACK potrf/potrs for dense, pbtrf/pbtrs for banded storage).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

extern "C"
{
void dpotrf_( const char *uplo, const int *n, double *a, const int *lda, int *info );
void dpotrs_( const char *uplo, const int *n, const int *nrhs, const double *a,
              const int *lda, double *b, const int *ldb, int *info );
void dpbtrf_( const char *uplo, const int *n, const int *kd, double *ab, const int *ldab, int *info );
void dpbtrs_( const char *uplo, const int *n, const int *kd, const int *nrhs, const double *ab,
              const int *ldab, double *b, const int *ldb, int *info );
}

namespace kipm
{

/// Column-major square matrix.
class dense_matrix
{
public:
    dense_matrix() = default;
    explicit dense_matrix( std::size_t n, double fill = 0 ): n_ { n }, data_( n*n, fill ) {}

    std::size_t size() const noexcept { return n_; }

    double&       operator()( std::size_t i, std::size_t j )       noexcept { return data_[i + n_*j]; }
    const double& operator()( std::size_t i, std::size_t j ) const noexcept { return data_[i + n_*j]; }

    double*       data()       noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool operator==( const dense_matrix& ) const = default;

    std::vector<double> multiply( std::span<const double> x ) const
    {
        if ( x.size() != n_ ) throw std::invalid_argument( "dense_matrix: dimension mismatch" );
        std::vector<double> y( n_, 0.0 );
        for ( std::size_t j = 0; j < n_; ++j )
        {
            const double xj = x[j];
            const double *col = data_.data() + n_*j;
            for ( std::size_t i = 0; i < n_; ++i )
                y[i] += col[i]*xj;
        }
        return y;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Thrown when a matrix is not numerically positive definite.
class factorization_error: public std::runtime_error
{
public:
    factorization_error( std::size_t pivot, const std::string &context = {} ):
        std::runtime_error( "Cholesky factorisation failed: leading minor of order "
                            + std::to_string(pivot) + " is not positive definite"
                            + ( context.empty() ? "" : " (" + context + ")" ) ),
        pivot_ { pivot }
    {}

    /// One-based index of the failing pivot.
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class cholesky
{
public:
    cholesky() = default;

    /// Factorises a symmetric positive definite matrix; only the lower triangle is read.
    explicit cholesky( dense_matrix a ): factor_ { std::move(a) }
    {
        const int n = static_cast<int>( factor_.size() );
        if ( n == 0 ) return;
        int info = 0;
        const char uplo = 'L';
        dpotrf_( &uplo, &n, factor_.data(), &n, &info );
        if ( info > 0 ) throw factorization_error( static_cast<std::size_t>(info) );
        if ( info < 0 ) throw std::logic_error( "dpotrf: invalid argument" );
    }

    std::size_t size() const noexcept { return factor_.size(); }

    void solve_in_place( std::span<double> rhs ) const
    {
        if ( rhs.size() != factor_.size() )
            throw std::invalid_argument( "cholesky: right-hand side has wrong length" );
        const int n = static_cast<int>( factor_.size() );
        if ( n == 0 ) return;
        const int nrhs = 1;
        int info = 0;
        const char uplo = 'L';
        dpotrs_( &uplo, &n, &nrhs, factor_.data(), &n, rhs.data(), &n, &info );
        if ( info != 0 ) throw std::logic_error( "dpotrs: invalid argument" );
    }

    std::vector<double> solve( std::span<const double> rhs ) const
    {
        std::vector<double> x( rhs.begin(), rhs.end() );
        solve_in_place(x);
        return x;
    }

private:
    dense_matrix factor_;
};

/// Lower band of a symmetric matrix with kd sub-diagonals, LAPACK layout:
/// entry (i, j), j <= i <= j + kd, is stored at (i - j) + (kd + 1) j.
class banded_matrix
{
public:
    banded_matrix() = default;
    banded_matrix( std::size_t n, std::size_t kd ): n_ { n }, kd_ { kd }, data_( (kd + 1)*n, 0.0 ) {}

    std::size_t size() const noexcept { return n_; }
    std::size_t bandwidth() const noexcept { return kd_; }

    /// Requires j <= i <= j + kd.
    double&       operator()( std::size_t i, std::size_t j )       noexcept { return data_[ (i - j) + (kd_ + 1)*j ]; }
    const double& operator()( std::size_t i, std::size_t j ) const noexcept { return data_[ (i - j) + (kd_ + 1)*j ]; }

    double*       data()       noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

private:
    std::size_t n_ = 0, kd_ = 0;
    std::vector<double> data_;
};

class banded_cholesky
{
public:
    banded_cholesky() = default;

    explicit banded_cholesky( banded_matrix a ): factor_ { std::move(a) }
    {
        const int n = static_cast<int>( factor_.size() );
        if ( n == 0 ) return;
        const int kd = static_cast<int>( factor_.bandwidth() ), ld = kd + 1;
        int info = 0;
        const char uplo = 'L';
        dpbtrf_( &uplo, &n, &kd, factor_.data(), &ld, &info );
        if ( info > 0 ) throw factorization_error( static_cast<std::size_t>(info) );
        if ( info < 0 ) throw std::logic_error( "dpbtrf: invalid argument" );
    }

    std::size_t size() const noexcept { return factor_.size(); }

    void solve_in_place( std::span<double> rhs ) const
    {
        if ( rhs.size() != factor_.size() )
            throw std::invalid_argument( "banded_cholesky: right-hand side has wrong length" );
        const int n = static_cast<int>( factor_.size() );
        if ( n == 0 ) return;
        const int kd = static_cast<int>( factor_.bandwidth() ), ld = kd + 1, nrhs = 1;
        int info = 0;
        const char uplo = 'L';
        dpbtrs_( &uplo, &n, &kd, &nrhs, factor_.data(), &ld, rhs.data(), &n, &info );
        if ( info != 0 ) throw std::logic_error( "dpbtrs: invalid argument" );
    }

    std::vector<double> solve( std::span<const double> rhs ) const
    {
        std::vector<double> x( rhs.begin(), rhs.end() );
        solve_in_place(x);
        return x;
    }

private:
    banded_matrix factor_;
};

}
