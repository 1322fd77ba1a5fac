#include "rbc/spectral/random.hpp"

#include "rbc/spectral/operators.hpp"

#include <cmath>
#include <random>

namespace rbc::spectral {

SpectralField random_field(const DiscretizationPtr& disc, std::uint64_t seed, double amplitude,
                           double decay, bool mean_free) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int n = disc->vertical_size();
    Eigen::MatrixXd c(disc->rows(), disc->cols());
    for (Eigen::Index col = 0; col < c.cols(); ++col) {
        const int k = static_cast<int>(col / 2);
        for (Eigen::Index r = 0; r < c.rows(); ++r) {
            const int j = col == 1 ? static_cast<int>(r) : static_cast<int>(r % n);
            c(r, col) = nd(gen) * std::exp(-decay * (k + j));
        }
    }
    if (mean_free) c.col(1).setZero();
    SpectralField f(disc, std::move(c));
    const double nrm = norm_H(f);
    if (nrm > 0.0) f *= amplitude / nrm;
    return f;
}

}  // namespace rbc::spectral
