#ifndef LKQN_PROBLEMS_HPP
#define LKQN_PROBLEMS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vec.hpp"

namespace lkqn {

// Smooth objective with analytic gradient. Immutable and callable from any
// thread; eval returns f(x) and fills g.
struct Problem {
    std::string name;
    std::size_t n = 0;
    std::function<double(const Vec&, Vec&)> eval;
    Vec x0;
    std::optional<double> f_star;

    // Present for quadratics f(x) = 1/2 x^T A x - b^T x (+ const): the action
    // of A and the linear term, enabling exact line searches.
    std::function<void(const Vec&, Vec&)> quad_action;
    Vec quad_b;

    bool has_quadratic() const { return static_cast<bool>(quad_action); }
};

// Native reimplementations of the named test problems; README lists the exact
// formula and standard start used for each. Throws std::invalid_argument for
// unknown names or incompatible dimensions.
Problem make_named_problem(const std::string& name, std::size_t n);
std::vector<std::string> named_problem_list();

// Random pd quadratic A = Q d(lambda) Q^T with log-uniform spectrum on
// [1, cond] (endpoints pinned), Q a product of three random reflections;
// b = A x_star for a random x_star, x0 = 0. Reproducible by seed.
Problem make_quadratic(std::size_t n, double cond, std::uint64_t seed);

struct DataMatrix {
    enum class Provenance { synthetic, idx_file };
    std::size_t rows = 0, cols = 0;
    std::vector<double> a; // row-major
    Provenance provenance = Provenance::synthetic;

    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
};

DataMatrix make_synthetic_lowrank(std::size_t m, std::size_t n, std::size_t rank,
                                  double noise, std::uint64_t seed);

// ||A - U V^T||_F^2 over x = [vec(U); vec(V)] (row-major blocks), dimension
// (m + n) k. x0 entries are seeded uniform in [-0.5, 0.5].
Problem make_lowrank_problem(DataMatrix A, std::size_t rank, std::uint64_t seed);

// ---- IDX container (big-endian; image magic 0x00000803, label 0x00000801) --

class IdxParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IdxTensor {
    std::vector<std::size_t> dims;
    std::vector<std::uint8_t> bytes;
};

IdxTensor idx_read(std::istream& in);
IdxTensor idx_read_file(const std::string& path);
void idx_write(std::ostream& out, const IdxTensor& t);
void idx_write_file(const std::string& path, const IdxTensor& t);

// Flattens a (count, h, w) image tensor to an (h*w) x count matrix with
// entries scaled to [0, 1].
DataMatrix idx_images_to_matrix(const IdxTensor& t);
std::vector<std::uint8_t> idx_labels(const IdxTensor& t);

DataMatrix idx_load(const std::string& images_path);
DataMatrix idx_load_class(const std::string& images_path, const std::string& labels_path,
                          int digit);

// Max over `points` random points of ||g - g_fd||_2 / max(1, ||g||_2) with
// central differences, h_i = 1e-6 (1 + |x_i|).
double gradient_check(const Problem& p, std::uint64_t seed, int points = 20);

} // namespace lkqn

#endif
