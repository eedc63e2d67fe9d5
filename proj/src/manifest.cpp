#include <fstream>
#include <set>

#include "mitoforge/csv.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/pipeline.hpp"

namespace mitoforge {

const char* to_string(DatasetGroup group) noexcept {
  switch (group) {
    case DatasetGroup::PrimaryTrain: return "primary_train";
    case DatasetGroup::ExternalA: return "external_a";
    case DatasetGroup::ExternalB: return "external_b";
  }
  return "unknown";
}

const char* to_string(Split split) noexcept {
  switch (split) {
    case Split::Unassigned: return "";
    case Split::Train: return "train";
    case Split::Val: return "val";
  }
  return "";
}

DatasetGroup parse_group(const std::string& text) {
  if (text == "primary_train") return DatasetGroup::PrimaryTrain;
  if (text == "external_a") return DatasetGroup::ExternalA;
  if (text == "external_b") return DatasetGroup::ExternalB;
  fail(ErrorKind::InvalidInput, "unknown dataset group '" + text + "'");
}

Split parse_split(const std::string& text) {
  if (text.empty()) return Split::Unassigned;
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  fail(ErrorKind::InvalidInput, "unknown split '" + text + "'");
}

namespace {

constexpr const char* kManifestColumns[] = {"id",     "path",   "label",
                                            "group",  "domain", "split"};

std::vector<ManifestRecord> records_from(const csv::Table& table,
                                         const std::string& source) {
  std::size_t col[6];
  for (std::size_t i = 0; i < 6; ++i) {
    col[i] = table.column(kManifestColumns[i]);
    if (col[i] == csv::Table::npos) {
      fail(ErrorKind::InvalidInput,
           source + ": manifest is missing column '" + kManifestColumns[i] + "'");
    }
  }

  std::vector<ManifestRecord> records;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    ManifestRecord r;
    r.id = row[col[0]];
    if (r.id.empty()) fail(ErrorKind::InvalidInput, source + ": empty id");
    if (!seen.insert(r.id).second) {
      fail(ErrorKind::InvalidInput, source + ": duplicate id '" + r.id + "'");
    }
    r.path = row[col[1]];
    const long long label = csv::parse_int(row[col[2]], "label of " + r.id);
    if (label < 0) {
      fail(ErrorKind::InvalidInput, source + ": negative label for " + r.id);
    }
    r.label = static_cast<int>(label);
    r.group = parse_group(row[col[3]]);
    r.domain = row[col[4]];
    r.split = parse_split(row[col[5]]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(const std::string& text,
                                           const std::string& source_name) {
  return records_from(csv::parse(text, source_name), source_name);
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  return records_from(csv::read(path), path.string());
}

void write_manifest(const std::vector<ManifestRecord>& records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  csv::write_row(out, {std::begin(kManifestColumns), std::end(kManifestColumns)});
  for (const auto& r : records) {
    csv::write_row(out, {r.id, r.path.string(), std::to_string(r.label),
                         to_string(r.group), r.domain, to_string(r.split)});
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace mitoforge
