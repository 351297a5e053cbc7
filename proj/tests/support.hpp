#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "relgraph/checked_program.hpp"
#include "relgraph/datastore.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(RELGRAPH_FIXTURE_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline relgraph::CheckedProgram compile(std::string_view text) {
  return relgraph::validate(relgraph::parse_program(text));
}

struct Loaded {
  relgraph::CheckedProgram program;
  relgraph::Datastore data;
};

inline Loaded load_fixture(const std::string& name) {
  auto program = compile(read_file(fixture(name) / "program.dr"));
  auto data = relgraph::load_data(fixture(name) / "data", program);
  return {std::move(program), std::move(data)};
}

inline relgraph::RawData::RawRow row(std::vector<std::string> values,
                                     std::optional<int> gold = std::nullopt) {
  return {std::move(values), gold};
}

}  // namespace testing
