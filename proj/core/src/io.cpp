#include "memlb/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "memlb/errors.hpp"

namespace memlb {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string expect_line(std::istream& is, const std::string& context) {
  std::string line;
  if (!std::getline(is, line)) {
    throw FormatError("unexpected end of file while reading " + context);
  }
  return line;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad real value '" + s + "' in " + context);
  }
}

std::vector<std::int8_t> parse_sign_row(const std::string& line, int d,
                                        const std::string& context) {
  if (static_cast<int>(line.size()) != d) {
    throw FormatError("sign row of length " + std::to_string(line.size()) +
                      ", expected " + std::to_string(d) + " in " + context);
  }
  std::vector<std::int8_t> signs(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    if (line[static_cast<std::size_t>(i)] == '+') {
      signs[static_cast<std::size_t>(i)] = 1;
    } else if (line[static_cast<std::size_t>(i)] == '-') {
      signs[static_cast<std::size_t>(i)] = -1;
    } else {
      throw FormatError(std::string("bad sign character '") +
                        line[static_cast<std::size_t>(i)] + "' in " + context);
    }
  }
  return signs;
}

void write_sign_row(std::ostream& os, const BaseVector& row) {
  for (int i = 0; i < row.dim(); ++i) os.put(row.sign(i) > 0 ? '+' : '-');
  os.put('\n');
}

}  // namespace

void write_sign_matrix_text(std::ostream& os, const SignMatrix& m, double scale) {
  os << m.d() << ' ' << m.n() << ' ' << format_double(scale) << '\n';
  for (const BaseVector& row : m.rows()) write_sign_row(os, row);
}

std::pair<SignMatrix, double> read_sign_matrix_text(std::istream& is) {
  std::istringstream header(expect_line(is, "sign matrix header"));
  int d = 0, n = 0;
  std::string scale_str;
  if (!(header >> d >> n >> scale_str)) {
    throw FormatError("bad sign matrix header");
  }
  const double scale = parse_double(scale_str, "sign matrix header");
  std::vector<BaseVector> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rows.emplace_back(parse_sign_row(expect_line(is, "sign matrix row"), d,
                                     "sign matrix row " + std::to_string(i)),
                      1.0);
  }
  return {SignMatrix(d, std::move(rows)), scale};
}

void write_sign_matrix_packed(std::ostream& os, const SignMatrix& m) {
  const int bytes_per_row = (m.d() + 7) / 8;
  for (const BaseVector& row : m.rows()) {
    std::vector<std::uint8_t> packed(static_cast<std::size_t>(bytes_per_row), 0);
    for (int i = 0; i < m.d(); ++i) {
      if (row.sign(i) > 0) {
        packed[static_cast<std::size_t>(i / 8)] |=
            static_cast<std::uint8_t>(1u << (i % 8));
      }
    }
    os.write(reinterpret_cast<const char*>(packed.data()), bytes_per_row);
  }
}

SignMatrix read_sign_matrix_packed(std::istream& is, int d, int n) {
  const int bytes_per_row = (d + 7) / 8;
  std::vector<BaseVector> rows;
  rows.reserve(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> packed(static_cast<std::size_t>(bytes_per_row));
  for (int r = 0; r < n; ++r) {
    if (!is.read(reinterpret_cast<char*>(packed.data()), bytes_per_row)) {
      throw FormatError("truncated packed sign matrix");
    }
    std::vector<std::int8_t> signs(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const bool bit = (packed[static_cast<std::size_t>(i / 8)] >> (i % 8)) & 1u;
      signs[static_cast<std::size_t>(i)] = bit ? 1 : -1;
    }
    rows.emplace_back(std::move(signs), 1.0);
  }
  return SignMatrix(d, std::move(rows));
}

void write_instance(std::ostream& os, const HardInstance& inst) {
  const InstanceParams& p = inst.params();
  os << "memlb-instance v1\n";
  os << "d " << p.d << '\n';
  os << "n " << p.n << '\n';
  os << "N " << p.N << '\n';
  os << "k " << p.k << '\n';
  os << "gamma " << format_double(p.gamma) << '\n';
  os << "eta " << format_double(p.eta) << '\n';
  os << "rho " << format_double(p.rho) << '\n';
  os << "scale " << format_double(p.global_scale) << '\n';
  os << "seed " << inst.seed() << '\n';
  os << "A\n";
  for (const BaseVector& row : inst.A().rows()) write_sign_row(os, row);
  os << "V\n";
  for (const BaseVector& v : inst.nem_vectors()) write_sign_row(os, v);
}

HardInstance read_instance(std::istream& is) {
  if (expect_line(is, "magic") != "memlb-instance v1") {
    throw FormatError("not a memlb-instance v1 file");
  }
  InstanceParams p;
  std::uint64_t seed = 0;
  auto field = [&](const std::string& name) {
    std::istringstream line(expect_line(is, "field " + name));
    std::string key, value;
    if (!(line >> key >> value) || key != name) {
      throw FormatError("expected field '" + name + "'");
    }
    return value;
  };
  p.d = std::stoi(field("d"));
  p.n = std::stoi(field("n"));
  p.N = std::stoi(field("N"));
  p.k = std::stoi(field("k"));
  p.gamma = parse_double(field("gamma"), "gamma");
  p.eta = parse_double(field("eta"), "eta");
  p.rho = parse_double(field("rho"), "rho");
  p.global_scale = parse_double(field("scale"), "scale");
  seed = std::stoull(field("seed"));
  p.validate();

  if (expect_line(is, "A marker") != "A") throw FormatError("expected 'A' block");
  std::vector<BaseVector> rows;
  for (int i = 0; i < p.n; ++i) {
    rows.emplace_back(parse_sign_row(expect_line(is, "A row"), p.d,
                                     "A row " + std::to_string(i)),
                      1.0);
  }
  if (expect_line(is, "V marker") != "V") throw FormatError("expected 'V' block");
  std::vector<BaseVector> vs;
  const double vscale = 1.0 / std::sqrt(static_cast<double>(p.d));
  for (int i = 0; i < p.N; ++i) {
    vs.emplace_back(parse_sign_row(expect_line(is, "V row"), p.d,
                                   "V row " + std::to_string(i)),
                    vscale);
  }
  return HardInstance::from_parts(p, seed, SignMatrix(p.d, std::move(rows)),
                                  std::move(vs));
}

void save_instance(const std::string& path, const HardInstance& inst) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_instance(os, inst);
  if (!os) throw FormatError("write failed for '" + path + "'");
}

HardInstance load_instance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_instance(is);
}

void write_run_record(std::ostream& os, const RunRecord& record) {
  for (const RunStep& s : record.steps) {
    nlohmann::json j;
    j["step"] = s.step;
    j["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    j["value"] = s.response.value;
    j["branch"] = branch_name(s.response.branch);
    j["informative"] = s.response.informative;
    j["state_bits"] = s.state_bits;
    os << j.dump() << '\n';
  }
}

std::string run_summary_line(const RunRecord& record, double reference,
                             double epsilon) {
  std::ostringstream os;
  os << "alg=" << record.algorithm << " queries=" << record.total_queries()
     << " best_value=" << format_double(record.best_value())
     << " best_gap=" << format_double(record.best_value() - reference)
     << " informative=" << record.informative_count();
  const auto hit = record.queries_to_gap(reference, epsilon);
  os << " queries_to_eps=" << (hit ? std::to_string(*hit) : "-");
  return os.str();
}

namespace {

void write_vector_line(std::ostream& os, const Eigen::VectorXd& v) {
  for (long i = 0; i < v.size(); ++i) {
    if (i) os.put(' ');
    os << format_double(v[i]);
  }
  os.put('\n');
}

Eigen::VectorXd read_vector_line(const std::string& line, int d) {
  Eigen::VectorXd v(d);
  std::istringstream is(line);
  std::string tok;
  for (int i = 0; i < d; ++i) {
    if (!(is >> tok)) throw FormatError("short vector line in transcript");
    v[i] = parse_double(tok, "transcript vector");
  }
  return v;
}

}  // namespace

void write_transcript(std::ostream& os, const GameTranscript& t) {
  os << "memlb-ovg-transcript v1\n";
  os << "d " << t.params.d << " k " << t.params.k << " m " << t.params.m
     << " M " << t.params.message_bits << " variant "
     << (t.params.variant == OracleVariant::kSubgradient ? "subgradient" : "index")
     << '\n';
  os << "seed " << t.seed << '\n';
  os << "strategy " << t.strategy << '\n';
  os << "win " << (t.win ? 1 : 0) << '\n';
  os << "violation " << (t.violation.empty() ? "-" : t.violation) << '\n';
  os << "status " << (t.status.empty() ? "-" : t.status) << '\n';
  os << "message_bits " << t.message.bit_length() << '\n';
  os << "message " << (t.message.bit_length() ? t.message.to_hex() : "-") << '\n';
  os << "queries " << t.queries.size() << '\n';
  for (const auto& q : t.queries) write_vector_line(os, q);
  os << "responses " << t.responses.size() << '\n';
  for (const auto& g : t.responses) write_vector_line(os, g);
  os << "returned " << t.returned.size() << '\n';
  for (const auto& y : t.returned) write_vector_line(os, y);
  os << "verdicts";
  for (const auto& v : t.verdicts) os << ' ' << (v.pass ? 1 : 0);
  os << '\n';
}

GameTranscript read_transcript(std::istream& is) {
  GameTranscript t;
  if (expect_line(is, "magic") != "memlb-ovg-transcript v1") {
    throw FormatError("not a memlb-ovg-transcript v1 file");
  }
  {
    std::istringstream line(expect_line(is, "params"));
    std::string kd, kk, km, kM, kv, variant;
    if (!(line >> kd >> t.params.d >> kk >> t.params.k >> km >> t.params.m >>
          kM >> t.params.message_bits >> kv >> variant)) {
      throw FormatError("bad transcript params line");
    }
    t.params.variant = variant == "index" ? OracleVariant::kIndex
                                          : OracleVariant::kSubgradient;
  }
  auto tail = [&](const std::string& key) {
    std::string line = expect_line(is, key);
    if (line.rfind(key + " ", 0) != 0) throw FormatError("expected '" + key + "'");
    return line.substr(key.size() + 1);
  };
  t.seed = std::stoull(tail("seed"));
  t.strategy = tail("strategy");
  t.win = tail("win") == "1";
  t.violation = tail("violation");
  if (t.violation == "-") t.violation.clear();
  t.status = tail("status");
  if (t.status == "-") t.status.clear();
  const std::size_t message_bits = std::stoull(tail("message_bits"));
  const std::string hex = tail("message");
  t.message = hex == "-" ? MemoryState{} : MemoryState::from_hex(hex, message_bits);

  auto read_block = [&](const std::string& key, std::vector<Eigen::VectorXd>* out) {
    const std::size_t count = std::stoull(tail(key));
    for (std::size_t i = 0; i < count; ++i) {
      out->push_back(read_vector_line(expect_line(is, key + " row"), t.params.d));
    }
  };
  read_block("queries", &t.queries);
  read_block("responses", &t.responses);
  read_block("returned", &t.returned);
  {
    std::istringstream line(expect_line(is, "verdicts"));
    std::string key;
    line >> key;
    int flag = 0;
    while (line >> flag) {
      VectorVerdict v;
      v.pass = flag == 1;
      t.verdicts.push_back(v);
    }
  }
  return t;
}

}  // namespace memlb
