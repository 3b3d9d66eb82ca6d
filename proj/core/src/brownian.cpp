#include "sselab/brownian.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace sselab {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_path_seed(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t state = base_seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  splitmix64(state);
  return splitmix64(state);
}

BrownianPath::BrownianPath(std::uint64_t base_seed, std::uint64_t index, double T, int steps)
    : base_seed_(base_seed), index_(index), T_(T) {
  if (steps < 1) throw std::invalid_argument("Brownian path needs at least one step");
  if (!(T > 0.0)) throw std::invalid_argument("Brownian path needs T > 0");
  std::mt19937_64 engine(derive_path_seed(base_seed, index));
  std::normal_distribution<double> normal(0.0, std::sqrt(T / steps));
  increments_.resize(static_cast<std::size_t>(steps));
  for (auto& v : increments_) v = normal(engine);
}

BrownianPath::BrownianPath(std::uint64_t base_seed, std::uint64_t index, double T,
                           std::vector<double> increments)
    : base_seed_(base_seed), index_(index), T_(T), increments_(std::move(increments)) {
  if (increments_.empty()) throw std::invalid_argument("Brownian path needs at least one step");
}

BrownianPath BrownianPath::zero(double T, int steps) {
  return BrownianPath(0, 0, T, std::vector<double>(static_cast<std::size_t>(steps), 0.0));
}

BrownianPath BrownianPath::coarsened(int factor) const {
  if (factor < 1 || steps() % factor != 0)
    throw std::invalid_argument("coarsening factor must divide the step count");
  std::vector<double> c(static_cast<std::size_t>(steps() / factor), 0.0);
  for (int k = 0; k < steps(); ++k) c[static_cast<std::size_t>(k / factor)] += increment(k);
  return BrownianPath(base_seed_, index_, T_, std::move(c));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McEstimate summarize(std::span<const double> values) {
  McEstimate e;
  const auto M = values.size();
  if (M == 0) return e;
  e.mean = pairwise_sum(values) / static_cast<double>(M);
  if (M < 2) return e;
  std::vector<double> dev(M);
  for (std::size_t k = 0; k < M; ++k) dev[k] = (values[k] - e.mean) * (values[k] - e.mean);
  const double var = pairwise_sum(dev) / static_cast<double>(M - 1);
  e.se = std::sqrt(var / static_cast<double>(M));
  return e;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) body(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<McEstimate> mc_expectation(const std::function<std::vector<double>(std::uint64_t)>& job,
                                       std::size_t dims, std::size_t paths, unsigned threads) {
  if (paths < 2) throw std::invalid_argument("Monte Carlo needs at least 2 paths");
  std::vector<std::vector<double>> per_dim(dims, std::vector<double>(paths, 0.0));
  parallel_for(paths, threads, [&](std::size_t k) {
    const auto out = job(k);
    if (out.size() != dims) throw std::logic_error("Monte Carlo job returned wrong arity");
    for (std::size_t d = 0; d < dims; ++d) per_dim[d][k] = out[d];
  });
  std::vector<McEstimate> result;
  result.reserve(dims);
  for (const auto& v : per_dim) result.push_back(summarize(v));
  return result;
}

McEstimate mc_expectation(const std::function<double(std::uint64_t)>& job, std::size_t paths,
                          unsigned threads) {
  return mc_expectation([&](std::uint64_t k) { return std::vector<double>{job(k)}; }, 1, paths,
                        threads)[0];
}

}  // namespace sselab
