#pragma once

#include <iosfwd>
#include <string>

#include "mda/core.hpp"

namespace mda {

// Header x1..xd,y; missing entries written as the literal token NA; doubles
// use 17 significant digits so a write/read cycle is exact.
void write_dataset_csv(std::ostream& out, const IncompleteDataset& data);
void write_dataset_csv(const std::string& path, const IncompleteDataset& data);

IncompleteDataset read_dataset_csv(std::istream& in);
IncompleteDataset read_dataset_csv(const std::string& path);

}  // namespace mda
