#pragma once

#include "mif/tasks/task.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace mif::tasks {

struct TokenSpan {
  int begin = 0;  // inclusive
  int end = 0;    // exclusive
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct InstructionSegment {
  TokenSpan span;
  SubgoalType type = SubgoalType::GoTo;
  int template_index = 0;
};

struct Instruction {
  std::vector<std::string> tokens;
  std::vector<SubgoalType> labels;
  std::vector<InstructionSegment> segments;
};

// Number of surface templates available for a subgoal type.
int template_count(SubgoalType t);

// One templated sentence per spec, concatenated.
Instruction generate_instruction(const Scene& scene, const TaskInstance& task, std::uint64_t seed);

// Every word the generator can emit.
const std::set<std::string>& generator_vocabulary();

}  // namespace mif::tasks
