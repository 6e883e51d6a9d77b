#include "ckl/core.hpp"

#include <algorithm>

namespace ckl {

DrugCombination canonicalize(std::vector<int> drug_list) {
    std::sort(drug_list.begin(), drug_list.end());
    drug_list.erase(std::unique(drug_list.begin(), drug_list.end()), drug_list.end());
    if (drug_list.empty()) throw EmptyCombination();
    return DrugCombination{std::move(drug_list)};
}

const char* to_string(Source s) {
    switch (s) {
        case Source::M_PLUS: return "M_PLUS";
        case Source::M_ZERO: return "M_ZERO";
        case Source::N_ZERO: return "N_ZERO";
        case Source::N_MINUS: return "N_MINUS";
        case Source::SYNTHETIC: return "SYNTHETIC";
    }
    return "?";
}

Source source_from_string(const std::string& s) {
    if (s == "M_PLUS") return Source::M_PLUS;
    if (s == "M_ZERO") return Source::M_ZERO;
    if (s == "N_ZERO") return Source::N_ZERO;
    if (s == "N_MINUS") return Source::N_MINUS;
    if (s == "SYNTHETIC") return Source::SYNTHETIC;
    throw ValidationError("unknown instance source: " + s);
}

SymmetricMatrix SymmetricMatrix::submatrix(const std::vector<int>& idx) const {
    SymmetricMatrix out(static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i; j < idx.size(); ++j)
            out.set(static_cast<int>(i), static_cast<int>(j), (*this)(idx[i], idx[j]));
    return out;
}

Matrix SymmetricMatrix::rows(const std::vector<int>& row_idx, const std::vector<int>& col_idx) const {
    Matrix out(static_cast<int>(row_idx.size()), static_cast<int>(col_idx.size()));
    for (std::size_t r = 0; r < row_idx.size(); ++r)
        for (std::size_t c = 0; c < col_idx.size(); ++c)
            out(static_cast<int>(r), static_cast<int>(c)) = (*this)(row_idx[r], col_idx[c]);
    return out;
}

int DrugRegistry::intern(const std::string& id) {
    if (id.empty()) throw ValidationError("drug id must be non-empty");
    auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    int idx = static_cast<int>(ids_.size());
    index_.emplace(id, idx);
    ids_.push_back(id);
    return idx;
}

std::optional<int> DrugRegistry::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int CombinationInterner::intern(const DrugCombination& c) {
    auto it = index_.find(c.drugs);
    if (it != index_.end()) return it->second;
    int idx = static_cast<int>(combos_.size());
    index_.emplace(c.drugs, idx);
    combos_.push_back(c);
    return idx;
}

} // namespace ckl
