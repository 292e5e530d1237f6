#pragma once

#include <optional>
#include <string>

namespace jema {

// Camera views: on-axis is the primary monitoring modality (aligned with the
// laser optics), off-axis is the oblique thermal view.
enum class Modality { on_axis, off_axis };

inline const char* to_string(Modality m) {
    return m == Modality::on_axis ? "on_axis" : "off_axis";
}

inline std::optional<Modality> modality_from_string(const std::string& s) {
    if (s == "on_axis") return Modality::on_axis;
    if (s == "off_axis") return Modality::off_axis;
    return std::nullopt;
}

}  // namespace jema
