// Core data model shared by every other module: drugs, combinations,
// events, labeled instances, dense symmetric matrices and 2x2 tables.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ckl {

// Validation errors map to CLI exit code 1, compute errors to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ComputeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyCombination : ValidationError {
    EmptyCombination() : ValidationError("combination is empty") {}
};
struct IndexOutOfRange : ValidationError {
    explicit IndexOutOfRange(const std::string& what) : ValidationError(what) {}
};
struct LengthMismatch : ValidationError {
    LengthMismatch() : ValidationError("vector lengths differ") {}
};

// Unordered set of drugs, stored as a strictly increasing index list.
struct DrugCombination {
    std::vector<int> drugs;

    int order() const { return static_cast<int>(drugs.size()); }
    bool operator==(const DrugCombination& o) const { return drugs == o.drugs; }
    bool operator<(const DrugCombination& o) const { return drugs < o.drugs; }
};

// Sorts and deduplicates; the only sanctioned way to build a DrugCombination.
DrugCombination canonicalize(std::vector<int> drug_list);

struct EventRecord {
    std::string event_id;
    DrugCombination combination;
    bool adr = false; // true = case event, false = control
};

enum class Source { M_PLUS, M_ZERO, N_ZERO, N_MINUS, SYNTHETIC };

const char* to_string(Source s);
Source source_from_string(const std::string& s);

struct LabeledInstance {
    DrugCombination combination;
    int label = 0; // -1 or +1
    Source source = Source::SYNTHETIC;
    std::int64_t frequency = 0;
    std::optional<double> odds_ratio; // present iff source is M_ZERO or N_ZERO
};

// Dense row-major matrix, not necessarily symmetric (kernel blocks, eigenvectors).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    const std::vector<double>& data() const { return a_; }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Symmetry is enforced by construction: set() writes both triangles.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int n, double fill = 0.0)
        : n_(n), a_(static_cast<std::size_t>(n) * n, fill) {}

    int size() const { return n_; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    void set(int i, int j, double v) {
        a_[static_cast<std::size_t>(i) * n_ + j] = v;
        a_[static_cast<std::size_t>(j) * n_ + i] = v;
    }
    void add_diagonal(double shift) {
        for (int i = 0; i < n_; ++i) a_[static_cast<std::size_t>(i) * n_ + i] += shift;
    }
    double trace() const {
        double t = 0;
        for (int i = 0; i < n_; ++i) t += a_[static_cast<std::size_t>(i) * n_ + i];
        return t;
    }
    const std::vector<double>& data() const { return a_; }
    bool operator==(const SymmetricMatrix& o) const { return n_ == o.n_ && a_ == o.a_; }

    SymmetricMatrix submatrix(const std::vector<int>& idx) const;
    Matrix rows(const std::vector<int>& row_idx, const std::vector<int>& col_idx) const;

private:
    int n_ = 0;
    std::vector<double> a_;
};

// Similarity matrix after PSD repair; shift records the uniform diagonal offset.
struct KernelMatrix {
    SymmetricMatrix values;
    double shift = 0.0;
};

// Counts for one drug combination D:
//   n1 events with D and ADR, m1 with D and no ADR,
//   n2 events without D and ADR, m2 without D and no ADR.
struct ContingencyTable {
    std::int64_t n1 = 0, m1 = 0, n2 = 0, m2 = 0;
    std::int64_t total() const { return n1 + m1 + n2 + m2; }
};

// Dense drug indexing, assigned by first appearance and then frozen.
class DrugRegistry {
public:
    int intern(const std::string& id);
    std::optional<int> find(const std::string& id) const;
    const std::string& id(int index) const { return ids_.at(index); }
    int size() const { return static_cast<int>(ids_.size()); }

private:
    std::map<std::string, int> index_;
    std::vector<std::string> ids_;
};

// Maps each distinct combination to a dense dataset-local index.
class CombinationInterner {
public:
    int intern(const DrugCombination& c);
    const DrugCombination& at(int index) const { return combos_.at(index); }
    int size() const { return static_cast<int>(combos_.size()); }

private:
    std::map<std::vector<int>, int> index_;
    std::vector<DrugCombination> combos_;
};

} // namespace ckl
