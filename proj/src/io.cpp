#include "hamcg/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hamcg/errors.hpp"
#include "json.hpp"

namespace hamcg {

using nlohmann::json;

namespace {

const char* kind_name(VertexKind k) {
  switch (k) {
    case VertexKind::exterior_min: return "exterior_min";
    case VertexKind::interior_saddle: return "interior_saddle";
    case VertexKind::open_top: return "open_top";
  }
  return "unknown";
}

// JSON has no infinity; non-finite values are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

constexpr char kLabelMagic[8] = {'H', 'C', 'G', 'L', 'B', 'L', '1', '\n'};

}  // namespace

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string graph_json(const ReebGraph& graph) {
  json j;
  j["h_max"] = graph.h_max;
  j["vertices"] = json::array();
  for (const auto& v : graph.vertices) {
    json jv{{"id", v.id}, {"kind", kind_name(v.kind)}, {"h", v.h}};
    jv["location"] = v.location ? json::array({v.location->first, v.location->second}) : json(nullptr);
    j["vertices"].push_back(jv);
  }
  j["edges"] = json::array();
  for (const auto& e : graph.edges) {
    json inc = json::array();
    for (const auto& [vid, sign] : e.incidence) inc.push_back(json::array({vid, sign}));
    j["edges"].push_back(
        {{"k", e.k}, {"h_lo", e.h_lo}, {"h_hi", e.h_hi}, {"incidence", inc}, {"seed", {e.seed_q, e.seed_p}}});
  }
  return j.dump(2) + "\n";
}

void write_label_grid(const std::filesystem::path& path, const ReebGraph& graph) {
  const BoxDomain& b = graph.box;
  const std::string header =
      json{{"q_lo", b.q_lo}, {"q_hi", b.q_hi}, {"p_lo", b.p_lo}, {"p_hi", b.p_hi}, {"nq", b.nq}, {"np", b.np}}.dump();
  std::string bytes(kLabelMagic, sizeof kLabelMagic);
  const std::uint32_t len = static_cast<std::uint32_t>(header.size());
  for (int s = 0; s < 4; ++s) bytes.push_back(static_cast<char>((len >> (8 * s)) & 0xff));
  bytes += header;
  for (int v : graph.label_grid) {
    const std::uint32_t u = static_cast<std::uint32_t>(static_cast<std::int32_t>(v));
    for (int s = 0; s < 4; ++s) bytes.push_back(static_cast<char>((u >> (8 * s)) & 0xff));
  }
  write_text(path, bytes);
}

std::vector<int> read_label_grid(const std::filesystem::path& path, BoxDomain& box) {
  const std::string bytes = read_text(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kLabelMagic, 8) != 0) {
    fail(ErrorKind::Io, path.string() + " is not a label grid file");
  }
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + s])) << (8 * s);
    return v;
  };
  const std::uint32_t len = u32(8);
  if (bytes.size() < 12 + static_cast<std::size_t>(len)) fail(ErrorKind::Io, "truncated label grid header");
  const json h = json::parse(bytes.substr(12, len));
  box.q_lo = h.at("q_lo");
  box.q_hi = h.at("q_hi");
  box.p_lo = h.at("p_lo");
  box.p_hi = h.at("p_hi");
  box.nq = h.at("nq");
  box.np = h.at("np");
  const std::size_t n = box.cell_count(), at = 12 + len;
  if (bytes.size() != at + 4 * n) fail(ErrorKind::Io, "label grid size does not match its header");
  std::vector<int> labels(n);
  for (std::size_t c = 0; c < n; ++c) labels[c] = static_cast<std::int32_t>(u32(at + 4 * c));
  return labels;
}

std::string coefficient_csv(const EdgeCoefficients& e) {
  std::string s = "h,T,A,B,TA,TB\n";
  for (std::size_t i = 0; i < e.h.size(); ++i) {
    s += fmt(e.h[i]) + "," + fmt(e.T[i]) + "," + fmt(e.A[i]) + "," + fmt(e.B[i]) + "," + fmt(e.TA[i]) + "," +
         fmt(e.TB[i]) + "\n";
  }
  return s;
}

std::string coefficient_table_json(const EdgeCoefficientTable& table) {
  json j;
  j["mass"] = table.mass;
  j["delta_sad"] = table.delta_sad;
  j["delta_min"] = table.delta_min;
  j["edges"] = json::array();
  for (const auto& e : table.edges) {
    j["edges"].push_back({{"k", e.k},
                          {"h_lo", e.h_lo},
                          {"h_hi", e.h_hi},
                          {"samples", e.h.size()},
                          {"TA_lo", num(e.TA_lo)},
                          {"TA_hi", num(e.TA_hi)},
                          {"T_lo", num(e.T_lo)},
                          {"T_hi", num(e.T_hi)},
                          {"A_lo", num(e.A_lo)},
                          {"A_hi", num(e.A_hi)}});
  }
  j["kirchhoff"] = json::array();
  for (const auto& r : table.kirchhoff) {
    j["kirchhoff"].push_back({{"vertex", r.vertex}, {"residual", r.residual}, {"relative", r.relative}});
  }
  return j.dump(2) + "\n";
}

std::string ensemble_csv(const std::vector<ParticleEnsemble>& snapshots) {
  std::string s = "t,particle_id";
  const int dim = snapshots.empty() ? 1 : snapshots.front().dim;
  for (int a = 0; a < dim; ++a) s += dim == 1 ? ",q" : ",q" + std::to_string(a);
  for (int a = 0; a < dim; ++a) s += dim == 1 ? ",p" : ",p" + std::to_string(a);
  s += "\n";
  for (const auto& e : snapshots) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      s += fmt(e.time) + "," + std::to_string(i);
      for (int a = 0; a < e.dim; ++a) s += "," + fmt(e.q[i * e.dim + a]);
      for (int a = 0; a < e.dim; ++a) s += "," + fmt(e.p[i * e.dim + a]);
      s += "\n";
    }
  }
  return s;
}

std::string ensemble_checkpoint_json(const ParticleEnsemble& ens) {
  // Seeds are 64-bit; store them as strings so JSON readers keep every bit.
  json j{{"dim", ens.dim},
         {"time", ens.time},
         {"seed", std::to_string(ens.seed)},
         {"stream_offset", std::to_string(ens.stream_offset)},
         {"step", std::to_string(ens.step)}};
  j["q"] = ens.q;
  j["p"] = ens.p;
  return j.dump() + "\n";
}

ParticleEnsemble ensemble_from_checkpoint(const std::string& text) {
  ParticleEnsemble e;
  try {
    const json j = json::parse(text);
    e.dim = j.at("dim");
    e.time = j.at("time");
    e.seed = std::stoull(j.at("seed").get<std::string>());
    e.stream_offset = std::stoull(j.at("stream_offset").get<std::string>());
    e.step = std::stoull(j.at("step").get<std::string>());
    e.q = j.at("q").get<std::vector<double>>();
    e.p = j.at("p").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    fail(ErrorKind::Io, std::string("malformed ensemble checkpoint: ") + ex.what());
  }
  e.validate();
  return e;
}

std::string graph_trajectory_csv(const DiscreteGenerator& gen, const GraphTrajectory& traj) {
  std::string s = "t,edge,h_center,f,cell_mass\n";
  for (const auto& d : traj.snapshots) {
    for (std::size_t k = 0; k < gen.mesh.edge_count(); ++k) {
      const int kk = static_cast<int>(k);
      for (int c = 0; c < gen.mesh.cells(kk); ++c) {
        const std::size_t idx = gen.mesh.offset(kk) + c;
        s += fmt(d.t) + "," + std::to_string(k) + "," + fmt(gen.mesh.center(kk, c)) + "," + fmt(d.f[idx]) + "," +
             fmt(d.cell_mass(gen, idx)) + "\n";
      }
    }
  }
  return s;
}

std::string vertex_diagnostics_csv(const DiscreteGenerator& gen, const GraphTrajectory& traj) {
  std::string s = "t,vertex,flux_residual\n";
  for (const auto& d : traj.snapshots) {
    for (const auto& v : gen.vertex_links) {
      s += fmt(d.t) + "," + std::to_string(v.vertex) + "," + fmt(gen.vertex_residual(v, d.f)) + "\n";
    }
  }
  return s;
}

std::string phase_density_csv(const std::vector<PhaseDensity>& snapshots) {
  std::string s = "t,q,p,rho\n";
  for (const auto& d : snapshots) {
    for (int j = 0; j < d.box.np; ++j)
      for (int i = 0; i < d.box.nq; ++i) {
        s += fmt(d.t) + "," + fmt(d.box.q_center(i)) + "," + fmt(d.box.p_center(j)) + "," + fmt(d.at(i, j)) + "\n";
      }
  }
  return s;
}

std::string position_density_csv(const std::vector<PositionDensity>& snapshots) {
  std::string s = "t,q,sigma\n";
  for (const auto& d : snapshots) {
    for (int i = 0; i < d.n(); ++i) s += fmt(d.t) + "," + fmt(d.center(i)) + "," + fmt(d.sigma[i]) + "\n";
  }
  return s;
}

std::string overdamped_csv(const OverdampedReport& report) {
  std::string s = "gamma,L1,W1\n";
  for (const auto& r : report.rows) s += fmt(r.gamma) + "," + fmt(r.l1) + "," + fmt(r.w1) + "\n";
  return s;
}

std::string rate_report_json(const RateReport& r) {
  json j{{"value", num(r.value)}, {"floor_estimate", num(r.floor_estimate)}, {"defect", num(r.defect)}};
  j["per_time_table"] = json::array();
  for (const auto& row : r.per_time) {
    j["per_time_table"].push_back(
        {{"t0", row.t0}, {"t1", row.t1}, {"increment", num(row.increment)}, {"defect", num(row.defect)}});
  }
  return j.dump(2) + "\n";
}

std::string dissipation_csv(const DissipationReport& r) {
  std::string s = "t,free_energy,dissipation,lhs,rhs,h_moment,h_moment_bound\n";
  for (const auto& row : r.rows) {
    s += fmt(row.t) + "," + fmt(row.free_energy) + "," + fmt(row.dissipation) + "," + fmt(row.lhs) + "," +
         fmt(row.rhs) + "," + fmt(row.h_moment) + "," + fmt(row.h_moment_bound) + "\n";
  }
  return s;
}

std::string manifest_json(const Manifest& m) {
  json j{{"tool", "hamcg"},
         {"version", HAMCG_VERSION},
         {"scenario", m.scenario},
         {"config_hash", m.config_hash},
         {"wall_seconds", m.wall_seconds},
         {"threads", m.threads},
         {"artifacts", m.artifacts}};
  return j.dump(2) + "\n";
}

}  // namespace hamcg
