#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mvscreen {

enum class ScreenLabel { TV, Smartphone, Computer, NonScreen };

enum class Binary { Screen, NonScreen };

inline constexpr std::array<ScreenLabel, 3> kScreenTypes = {
    ScreenLabel::TV, ScreenLabel::Smartphone, ScreenLabel::Computer};

std::string_view to_string(ScreenLabel label) noexcept;
std::string_view to_string(Binary binary) noexcept;

/// Parses the canonical names "TV", "Smartphone", "Computer", "NonScreen".
std::optional<ScreenLabel> parse_screen_label(std::string_view text) noexcept;
std::optional<Binary> parse_binary(std::string_view text) noexcept;

constexpr Binary to_binary(ScreenLabel label) noexcept {
  return label == ScreenLabel::NonScreen ? Binary::NonScreen : Binary::Screen;
}

}  // namespace mvscreen
