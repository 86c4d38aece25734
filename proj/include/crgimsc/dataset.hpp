#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crgimsc/csv.hpp"
#include "crgimsc/rng.hpp"
#include "crgimsc/types.hpp"

namespace crgimsc {

// One feature representation: d^v rows (features) x n^v columns (existing
// samples, ordered by ascending global index).
struct ViewMatrix {
    Matrix data;

    Index feature_dim() const { return data.rows(); }
    Index sample_count() const { return data.cols(); }
};

// n x V binary flags; flags(i, v) == 1 iff sample i exists in view v.
struct PresenceMask {
    IntMatrix flags;

    Index n() const { return flags.rows(); }
    Index view_count() const { return flags.cols(); }
    bool is_present(Index sample, Index view) const { return flags(sample, view) != 0; }
    Index present_count(Index view) const { return flags.col(view).sum(); }

    void validate() const {
        for (Index i = 0; i < flags.rows(); ++i) {
            if (flags.row(i).sum() == 0)
                throw std::runtime_error("sample " + std::to_string(i) + " present in no view");
            for (Index v = 0; v < flags.cols(); ++v)
                if (flags(i, v) != 0 && flags(i, v) != 1)
                    throw std::runtime_error("presence mask entries must be 0 or 1");
        }
    }
};

// Column selector mapping a view's existing samples to global indices; stored
// as the list of global indices, which makes U*M a column gather and B*M^T a
// column scatter (both exact, no arithmetic).
struct MarkMatrix {
    Index n_total = 0;
    std::vector<Index> global_index; // ascending, one per existing sample

    Index existing_count() const { return static_cast<Index>(global_index.size()); }

    IntMatrix to_dense() const {
        IntMatrix m = IntMatrix::Zero(n_total, existing_count());
        for (Index j = 0; j < existing_count(); ++j) m(global_index[static_cast<std::size_t>(j)], j) = 1;
        return m;
    }
};

inline MarkMatrix mark_matrix(const PresenceMask& presence, Index view) {
    if (view < 0 || view >= presence.view_count())
        throw std::runtime_error("view index out of range: " + std::to_string(view));
    MarkMatrix m;
    m.n_total = presence.n();
    for (Index i = 0; i < presence.n(); ++i)
        if (presence.is_present(i, view)) m.global_index.push_back(i);
    return m;
}

// U * M^v for a k x n matrix U: pick the columns of the existing samples.
template <typename Derived>
Matrix gather_columns(const Eigen::MatrixBase<Derived>& u, const MarkMatrix& mark) {
    Matrix out(u.rows(), mark.existing_count());
    for (Index j = 0; j < mark.existing_count(); ++j)
        out.col(j) = u.col(mark.global_index[static_cast<std::size_t>(j)]);
    return out;
}

// B * (M^v)^T for a k x n^v matrix B: place columns at their global index,
// zero elsewhere.
template <typename Derived>
Matrix scatter_columns(const Eigen::MatrixBase<Derived>& b, const MarkMatrix& mark) {
    Matrix out = Matrix::Zero(b.rows(), mark.n_total);
    for (Index j = 0; j < mark.existing_count(); ++j)
        out.col(mark.global_index[static_cast<std::size_t>(j)]) = b.col(j);
    return out;
}

struct MultiViewDataset {
    std::vector<ViewMatrix> views;
    PresenceMask presence;
    std::optional<std::vector<int>> labels;

    Index n() const { return presence.n(); }
    Index view_count() const { return static_cast<Index>(views.size()); }
    bool fully_present() const { return presence.flags.sum() == presence.n() * presence.view_count(); }

    void validate() const {
        if (views.empty()) throw std::runtime_error("dataset has no views");
        if (presence.view_count() != view_count())
            throw std::runtime_error("presence mask view count does not match dataset");
        presence.validate();
        for (Index v = 0; v < view_count(); ++v) {
            const auto& view = views[static_cast<std::size_t>(v)];
            if (view.sample_count() != presence.present_count(v))
                throw std::runtime_error("view " + std::to_string(v) +
                                         " has " + std::to_string(view.sample_count()) +
                                         " columns but mask marks " + std::to_string(presence.present_count(v)) +
                                         " samples present");
            if (!view.data.allFinite())
                throw std::runtime_error("view " + std::to_string(v) + " contains non-finite values");
        }
        if (labels && static_cast<Index>(labels->size()) != n())
            throw std::runtime_error("label count does not match sample count");
    }
};

// Per-feature min-max map to [0, 1]; constant features go to 0.
inline ViewMatrix normalize_nonnegative(const ViewMatrix& view) {
    if (!view.data.allFinite()) throw std::runtime_error("cannot normalize non-finite data");
    ViewMatrix out;
    out.data.resizeLike(view.data);
    for (Index r = 0; r < view.data.rows(); ++r) {
        const Real lo = view.data.row(r).minCoeff();
        const Real hi = view.data.row(r).maxCoeff();
        if (hi > lo)
            out.data.row(r) = (view.data.row(r).array() - lo) / (hi - lo);
        else
            out.data.row(r).setZero();
    }
    return out;
}

// Exactly round(missing_rate * n) samples become incomplete; each keeps a
// uniformly drawn nonempty proper subset of views.
inline PresenceMask generate_mask(Index n, Index view_count, Real missing_rate, std::uint64_t seed) {
    if (view_count < 2) throw std::runtime_error("masking needs at least 2 views");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw std::runtime_error("missing_rate must lie in [0, 1)");
    PresenceMask mask;
    mask.flags = IntMatrix::Ones(n, view_count);
    const auto incomplete = static_cast<std::size_t>(std::llround(missing_rate * static_cast<Real>(n)));
    if (incomplete == 0) return mask;

    Rng rng(seed);
    const auto chosen = sample_without_replacement(rng, static_cast<std::size_t>(n), incomplete);
    const std::uint64_t subsets = (std::uint64_t{1} << view_count) - 2; // nonempty proper subsets
    for (std::size_t s : chosen) {
        const std::uint64_t bits = 1 + uniform_index(rng, subsets);
        for (Index v = 0; v < view_count; ++v)
            mask.flags(static_cast<Index>(s), v) = (bits >> v) & 1 ? 1 : 0;
    }
    return mask;
}

// Restrict a fully present dataset to the samples a mask keeps per view.
inline MultiViewDataset apply_mask(const MultiViewDataset& dataset, const PresenceMask& mask) {
    if (!dataset.fully_present())
        throw std::runtime_error("apply_mask requires a fully present dataset");
    if (mask.n() != dataset.n() || mask.view_count() != dataset.view_count())
        throw std::runtime_error("mask shape does not match dataset");
    MultiViewDataset out;
    out.presence = mask;
    out.labels = dataset.labels;
    for (Index v = 0; v < dataset.view_count(); ++v) {
        const MarkMatrix mark = mark_matrix(mask, v);
        ViewMatrix view;
        view.data = gather_columns(dataset.views[static_cast<std::size_t>(v)].data, mark);
        out.views.push_back(std::move(view));
    }
    out.validate();
    return out;
}

// Well separated Gaussian blobs sharing cluster identity across views, then
// min-max normalized per feature. Centroids sit at `separation` times
// orthonormal directions when the feature dimension allows, so nearest
// centroid recovers the labels with overwhelming probability.
inline MultiViewDataset synthesize_gaussian_multiview(Index n_per_cluster, Index k, Index view_count,
                                                      const std::vector<Index>& feature_dims,
                                                      Real separation, std::uint64_t seed) {
    if (separation <= 0) throw std::runtime_error("separation must be positive");
    if (static_cast<Index>(feature_dims.size()) != view_count)
        throw std::runtime_error("need one feature dimension per view");
    const Index n = n_per_cluster * k;
    Rng rng(seed);

    MultiViewDataset out;
    out.presence.flags = IntMatrix::Ones(n, view_count);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i / n_per_cluster);
    out.labels = labels;

    for (Index v = 0; v < view_count; ++v) {
        const Index d = feature_dims[static_cast<std::size_t>(v)];
        if (d < 1) throw std::runtime_error("feature dimensions must be positive");
        Matrix dirs(d, k);
        for (Index r = 0; r < d; ++r)
            for (Index c = 0; c < k; ++c) dirs(r, c) = normal(rng);
        if (d >= k) {
            Eigen::HouseholderQR<Matrix> qr(dirs);
            dirs = qr.householderQ() * Matrix::Identity(d, k);
        } else {
            for (Index c = 0; c < k; ++c) dirs.col(c).normalize();
        }
        Matrix centroids = separation * dirs;

        ViewMatrix view;
        view.data.resize(d, n);
        for (Index i = 0; i < n; ++i) {
            const Index c = i / n_per_cluster;
            for (Index r = 0; r < d; ++r) view.data(r, i) = centroids(r, c) + normal(rng);
        }
        out.views.push_back(normalize_nonnegative(view));
    }
    out.validate();
    return out;
}

// Manifest: JSON { "views": [{"csv": path}, ...],
//                  "labels_csv": optional path, "mask_csv": optional path }.
// View CSVs hold one row per present sample; they are transposed to
// d^v x n^v in memory. Relative paths resolve against the manifest directory.
inline MultiViewDataset load_dataset(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad manifest json: " + std::string(e.what()));
    }
    const auto base = std::filesystem::path(manifest_path).parent_path();
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    if (!manifest.contains("views") || !manifest["views"].is_array() || manifest["views"].empty())
        throw std::runtime_error("manifest needs a non-empty 'views' array");

    MultiViewDataset out;
    for (const auto& entry : manifest["views"]) {
        ViewMatrix view;
        view.data = read_csv_matrix(resolve(entry.at("csv").get<std::string>())).transpose();
        out.views.push_back(std::move(view));
    }
    const Index view_count = out.view_count();

    if (manifest.contains("mask_csv")) {
        const Matrix raw = read_csv_matrix(resolve(manifest["mask_csv"].get<std::string>()));
        if (raw.cols() != view_count)
            throw std::runtime_error("mask has " + std::to_string(raw.cols()) +
                                     " columns for " + std::to_string(view_count) + " views");
        out.presence.flags = raw.cast<int>();
    } else {
        out.presence.flags = IntMatrix::Ones(out.views.front().sample_count(), view_count);
    }

    if (manifest.contains("labels_csv"))
        out.labels = read_csv_labels(resolve(manifest["labels_csv"].get<std::string>()));

    out.validate();
    return out;
}

// Inverse of load_dataset: writes <name>_view<j>.csv (+ mask/labels) and a
// manifest, returning the manifest path.
inline std::string save_dataset(const MultiViewDataset& dataset, const std::string& dir,
                                const std::string& name = "dataset") {
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir);
    nlohmann::json manifest;
    manifest["views"] = nlohmann::json::array();
    for (Index v = 0; v < dataset.view_count(); ++v) {
        const std::string file = name + "_view" + std::to_string(v) + ".csv";
        write_csv_matrix((base / file).string(), dataset.views[static_cast<std::size_t>(v)].data.transpose());
        manifest["views"].push_back({{"csv", file}});
    }
    if (!dataset.fully_present()) {
        const std::string file = name + "_mask.csv";
        write_csv_matrix((base / file).string(), dataset.presence.flags);
        manifest["mask_csv"] = file;
    }
    if (dataset.labels) {
        const std::string file = name + "_labels.csv";
        write_csv_labels((base / file).string(), *dataset.labels);
        manifest["labels_csv"] = file;
    }
    const std::string manifest_path = (base / (name + ".json")).string();
    std::ofstream out(manifest_path);
    if (!out) throw std::runtime_error("cannot write manifest: " + manifest_path);
    out << manifest.dump(2) << '\n';
    return manifest_path;
}

inline bool datasets_equal(const MultiViewDataset& a, const MultiViewDataset& b) {
    if (a.view_count() != b.view_count() || a.n() != b.n()) return false;
    if ((a.presence.flags.array() != b.presence.flags.array()).any()) return false;
    if (a.labels.has_value() != b.labels.has_value()) return false;
    if (a.labels && *a.labels != *b.labels) return false;
    for (Index v = 0; v < a.view_count(); ++v) {
        const auto& va = a.views[static_cast<std::size_t>(v)].data;
        const auto& vb = b.views[static_cast<std::size_t>(v)].data;
        if (va.rows() != vb.rows() || va.cols() != vb.cols()) return false;
        if ((va.array() != vb.array()).any()) return false;
    }
    return true;
}

} // namespace crgimsc
