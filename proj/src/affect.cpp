// SPDX-License-Identifier: Apache-2.0
#include "hmtl/affect.hpp"

#include <algorithm>

namespace hmtl {

namespace {
constexpr std::array<std::string_view, kNumEmotions> kEmotionNames{
    "neutral", "anger", "disgust", "fear", "happiness", "sadness", "surprise"};
}

std::string_view emotion_name(std::size_t index) {
    return index < kEmotionNames.size() ? kEmotionNames[index] : std::string_view{};
}

std::optional<std::size_t> emotion_index(std::string_view name) {
    const auto it = std::find(kEmotionNames.begin(), kEmotionNames.end(), name);
    if (it == kEmotionNames.end()) return std::nullopt;
    return static_cast<std::size_t>(it - kEmotionNames.begin());
}

std::vector<std::string> emotion_names() { return {kEmotionNames.begin(), kEmotionNames.end()}; }

std::optional<std::size_t> au_index(int au_number) {
    const auto it = std::find(kCanonicalAus.begin(), kCanonicalAus.end(), au_number);
    if (it == kCanonicalAus.end()) return std::nullopt;
    return static_cast<std::size_t>(it - kCanonicalAus.begin());
}

std::string au_label(std::size_t index) { return "AU" + std::to_string(kCanonicalAus.at(index)); }

std::vector<std::string> au_labels() {
    std::vector<std::string> out;
    out.reserve(kNumAus);
    for (std::size_t i = 0; i < kNumAus; ++i) out.push_back(au_label(i));
    return out;
}

}  // namespace hmtl
