#include "siplab/batch.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "siplab/io.hpp"

namespace siplab {

void TrajectoryBatch::validate() const {
  if (replicas < 1 || length < 1)
    throw std::invalid_argument("batch needs R >= 1 and n >= 1");
  if (values.size() != replicas * length)
    throw std::invalid_argument("batch value array shape mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in batch");
}

void TrajectoryBatch::write_csv(const std::filesystem::path& csv_path,
                                const std::filesystem::path& sidecar_json,
                                const std::string& family_label,
                                const std::string& params_json) const {
  CsvWriter w(csv_path);
  w.header({"replica", "step", "value"});
  for (std::size_t r = 0; r < replicas; ++r)
    for (std::size_t k = 1; k <= length; ++k)
      w.raw_row({std::to_string(r), std::to_string(k),
                 CsvWriter::format_double(value(r, k))});

  nlohmann::json meta;
  meta["family"] = family_label;
  meta["params"] = nlohmann::json::parse(params_json);
  meta["replicas"] = replicas;
  meta["n"] = length;
  meta["burn_in"] = burn_in;
  meta["lag_trunc"] = lag_trunc;
  nlohmann::json seedlist = nlohmann::json::array();
  for (const auto& s : seeds)
    seedlist.push_back({{"root_seed", s.root_seed}, {"stream_index", s.stream_index}});
  meta["seeds"] = seedlist;
  write_text_file(sidecar_json, meta.dump(2) + "\n");
}

}  // namespace siplab
