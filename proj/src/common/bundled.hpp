#pragma once

#include <string_view>

// Data files compiled into the library (generated from data/ at build time).
namespace pb::bundled {

std::string_view symbols_tsv();
std::string_view profiles_toml();
std::string_view rules_toml();
std::string_view hints_toml();

}  // namespace pb::bundled
