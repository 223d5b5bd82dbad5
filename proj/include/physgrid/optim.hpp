#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace physgrid {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, AdamConfig config);

    void step(std::span<double> params, std::span<const double> grad);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

/// Worker count: PHYSGRID_THREADS when set (>= 1), else the hardware count.
std::size_t worker_threads();

/// Runs fn(i) for i in [0, n) on up to worker_threads() threads. Callers write
/// results by index and reduce them in order, so output does not depend on the
/// thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace physgrid
