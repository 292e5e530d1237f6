#include "jema/train/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "jema/synth/synth.hpp"

namespace jema::train {

FrameDataset::FrameDataset(synth::Manifest manifest, int input_size, std::uint64_t split_seed,
                           double val_fraction, double test_fraction)
    : manifest_(std::move(manifest)), input_size_(input_size) {
    const int n = size();
    if (n < 2) throw std::invalid_argument("dataset needs at least 2 frames");

    labels_.reserve(n);
    cells_.reserve(n);
    for (const auto& rec : manifest_.records) {
        labels_.push_back(synth::normalize(rec, manifest_.norm));
        cells_.push_back(manifest_.grid.nearest_cell(rec.power_w, rec.velocity_mm_s));
    }
    raw_on_.resize(n);
    raw_off_.resize(n);
    small_on_.resize(n);
    small_off_.resize(n);

    // Stratified split: shuffle within each DOE cell, then peel off the test
    // and validation shares so every cell is represented in every split.
    std::map<int, std::vector<int>> by_cell;
    for (int i = 0; i < n; ++i) by_cell[cells_[i]].push_back(i);
    Rng rng(Rng::derive_seed(split_seed, "split"));
    for (auto& [cell, members] : by_cell) {
        rng.shuffle(members);
        const int m = static_cast<int>(members.size());
        const int n_test = static_cast<int>(std::lround(test_fraction * m));
        const int n_val = static_cast<int>(std::lround(val_fraction * m));
        for (int k = 0; k < m; ++k) {
            if (k < n_test) {
                test_idx_.push_back(members[k]);
            } else if (k < n_test + n_val) {
                val_idx_.push_back(members[k]);
            } else {
                train_idx_.push_back(members[k]);
            }
        }
    }
    std::sort(train_idx_.begin(), train_idx_.end());
    std::sort(val_idx_.begin(), val_idx_.end());
    std::sort(test_idx_.begin(), test_idx_.end());
}

const std::vector<int>& FrameDataset::indices(Split split) const {
    switch (split) {
        case Split::train: return train_idx_;
        case Split::val: return val_idx_;
        case Split::test: return test_idx_;
    }
    throw std::logic_error("unknown split");
}

const Image& FrameDataset::raw(int idx, Modality m) const {
    auto& slot = (m == Modality::on_axis ? raw_on_ : raw_off_)[idx];
    if (!slot) {
        const auto& rec = manifest_.records[idx];
        const std::string path =
            manifest_.resolve(m == Modality::on_axis ? rec.on_axis_path : rec.off_axis_path);
        slot = io::read_png_gray(path);
        (m == Modality::on_axis ? on_reads_ : off_reads_)++;
    }
    return *slot;
}

const Image& FrameDataset::input(int idx, Modality m) const {
    auto& slot = (m == Modality::on_axis ? small_on_ : small_off_)[idx];
    if (!slot) slot = resize_bilinear(raw(idx, m), input_size_, input_size_);
    return *slot;
}

Image FrameDataset::augmented_input(int idx, Modality m, Rng& rng) const {
    const Image aug = synth::augment(raw(idx, m), rng);
    if (input_size_ == synth::kAugmentSize) return aug;
    return resize_bilinear(aug, input_size_, input_size_);
}

}  // namespace jema::train
