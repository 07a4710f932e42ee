// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hmtl {

inline constexpr std::size_t kNumEmotions = 7;
inline constexpr std::size_t kNumAus = 17;

/// Canonical action-unit set, ascending by AU number. Index i in every AU
/// vector of the toolkit refers to kCanonicalAus[i].
inline constexpr std::array<int, kNumAus> kCanonicalAus{1,  2,  4,  5,  6,  7,  9,  10, 11,
                                                        12, 15, 17, 20, 23, 24, 25, 26};

enum class Emotion : std::uint8_t { Neutral, Anger, Disgust, Fear, Happiness, Sadness, Surprise };

inline constexpr std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

std::string_view emotion_name(std::size_t index);
std::optional<std::size_t> emotion_index(std::string_view name);
std::vector<std::string> emotion_names();

std::optional<std::size_t> au_index(int au_number);
std::string au_label(std::size_t index);  // "AU12"
std::vector<std::string> au_labels();

/// Three-state binary annotation used for AU vectors and generic attributes.
enum class Annotation : std::int8_t { Missing = -1, Negative = 0, Positive = 1 };

inline bool annotated(Annotation a) { return a != Annotation::Missing; }

}  // namespace hmtl
