// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hmtl/labels.hpp"
#include "hmtl/relatedness.hpp"

namespace hmtl {

/// Annotation CSV, one row per sample:
///   id,video_id,frame_idx,f0..f{d-1},v,a,expr,au_1,au_2,...,au_26[,compound]
/// AU columns follow the canonical AU order and hold 0, 1 or blank
/// (unannotated). v, a, expr, video_id and frame_idx are blank when absent.
/// expr is the emotion index or name.
void write_dataset(std::ostream& out, const std::vector<HeterogeneousSample>& samples);
void write_dataset(const std::filesystem::path& path, const std::vector<HeterogeneousSample>& samples);

std::vector<HeterogeneousSample> read_dataset(std::istream& in, const std::string& source_name = "<stream>");
std::vector<HeterogeneousSample> read_dataset(const std::filesystem::path& path);

/// Samples annotated with both an expression and AUs, as a corpus for
/// empirical relatedness inference.
CoAnnotatedCorpus co_annotated_corpus(const std::vector<HeterogeneousSample>& samples);

}  // namespace hmtl
