// pde-lddmm: registration runs, derivative checks, synthetic data, warping
// and label evaluation.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "pdelddmm/pdelddmm.hpp"

namespace fs = std::filesystem;
using namespace pdelddmm;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, check_failed = 1, usage = 2, numerical = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

/// Digest of header text plus payload.
std::string field_digest(const fs::path& header)
{
  const auto raw = detail::read_header(header).data;
  return sha256_file(header) + ":" + sha256_file(raw);
}

void write_text(const fs::path& p, const std::string& text)
{
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + p.string());
  out << text;
}

std::string metrics_csv(const std::vector<IterationMetrics>& rows)
{
  std::ostringstream out;
  out << "iter,energy_total,energy_reg,energy_sim,rmse_rel,grad_inf_rel,pcg_iters,jac_min,jac_max,wall_seconds\n";
  for (const auto& r : rows)
    out << r.iter << ',' << format_double(r.energy.total) << ',' << format_double(r.energy.regularization) << ','
        << format_double(r.energy.similarity) << ',' << format_double(r.rmse_rel) << ','
        << format_double(r.grad_inf_rel) << ',' << r.pcg_iters << ',' << format_double(r.jac_min) << ','
        << format_double(r.jac_max) << ',' << format_double(r.wall_seconds) << '\n';
  return out.str();
}

void ensure_dir(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// register

struct RegisterArgs {
  std::string source, target, out, config;
  std::uint64_t seed = 0;
  std::optional<std::string> variant, transport;
  std::optional<int> iters, nt, s;
  std::optional<double> alpha, sigma;
};

int cmd_register(const RegisterArgs& a)
{
  RegistrationConfig cfg;
  if (!a.config.empty())
    apply_config(cfg, read_key_values(a.config));
  KeyValues overrides;
  if (a.variant)
    overrides["variant"] = *a.variant;
  if (a.transport)
    overrides["transport"] = *a.transport;
  if (a.iters)
    overrides["max_outer"] = std::to_string(*a.iters);
  if (a.nt)
    overrides["nt"] = std::to_string(*a.nt);
  if (a.s)
    overrides["s"] = std::to_string(*a.s);
  if (a.alpha)
    overrides["alpha"] = format_double(*a.alpha);
  if (a.sigma)
    overrides["sigma"] = format_double(*a.sigma);
  apply_config(cfg, overrides);

  const auto source = load_field(a.source);
  const auto target = load_field(a.target);
  if (!(source.grid == target.grid))
    throw UsageError("source and target grids differ");

  const auto res = register_images(cfg, source, target);

  const fs::path out(a.out);
  ensure_dir(out);
  save_vector_field(res.v0_final, out / "v0.hdr", "velocity");
  save_field(res.warped, out / "warped.hdr");
  save_vector_field(res.inverse_map.displacement, out / "inverse_map.hdr", "displacement");
  write_text(out / "metrics.csv", metrics_csv(res.history));

  std::ostringstream m;
  m << "# run manifest; usable as --config\n";
  m << "tool=pde-lddmm\nversion=" << kVersion << "\ncommand=register\n";
  m << "source=" << fs::absolute(a.source).string() << "\nsource_sha256=" << field_digest(a.source) << '\n';
  m << "target=" << fs::absolute(a.target).string() << "\ntarget_sha256=" << field_digest(a.target) << '\n';
  m << "seed=" << a.seed << "\nrng=" << Rng::name() << '\n';
  for (const auto& [k, v] : config_key_values(cfg, source.grid))
    m << k << '=' << v << '\n';
  m << "status=" << to_string(res.status) << '\n';
  m << "iterations=" << res.history.size() - 1 << '\n';
  m << "negative_curvature_events=" << res.negative_curvature_events << '\n';
  m << "metrics=metrics.csv\n";
  write_text(out / "manifest.txt", m.str());

  const auto& last = res.history.back();
  std::printf("%s: %s after %zu iterations, rmse_rel %s, jac [%s, %s]\n", to_string(cfg.variant).c_str(),
              to_string(res.status).c_str(), res.history.size() - 1, format_double(last.rmse_rel).c_str(),
              format_double(last.jac_min).c_str(), format_double(last.jac_max).c_str());
  return ok;
}

// check-derivatives

int cmd_check(const std::string& preset_name, std::uint64_t seed, bool corrupt, const std::string& out)
{
  const CheckPreset* preset = nullptr;
  try {
    preset = &find_check_preset(preset_name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  GeodesicOptions geo;
  if (corrupt)
    geo.adjoint_sign = -1.0;
  const auto rows = run_derivative_checks(*preset, seed, geo);
  std::ostringstream table;
  table << "check,error,tolerance,result\n";
  bool all = true;
  std::printf("%-22s %-12s %-10s %s\n", "check", "error", "tolerance", "result");
  for (const auto& r : rows) {
    all = all && r.pass();
    std::printf("%-22s %-12.3e %-10.1e %s\n", r.name.c_str(), r.error, r.tolerance, r.pass() ? "PASS" : "FAIL");
    table << r.name << ',' << format_double(r.error) << ',' << format_double(r.tolerance) << ','
          << (r.pass() ? "pass" : "fail") << '\n';
  }
  if (!out.empty()) {
    ensure_dir(out);
    write_text(fs::path(out) / "checks.csv", table.str());
  }
  return all ? ok : check_failed;
}

// synth

int cmd_synth(const std::string& name, const SynthOptions& o, const std::string& out)
{
  SynthPair p;
  try {
    p = make_synthetic(name, o);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(out);
  ensure_dir(dir);
  save_field(p.source, dir / "source.hdr");
  save_field(p.target, dir / "target.hdr");
  save_labels(p.source_labels, dir / "source_labels.hdr");
  save_labels(p.target_labels, dir / "target_labels.hdr");
  std::ostringstream m;
  m << "tool=pde-lddmm\nversion=" << kVersion << "\ncommand=synth\nname=" << name << "\nn=" << o.n
    << "\nndim=" << o.ndim << "\nshift=" << o.shift << "\nnoise=" << format_double(o.noise) << "\nseed=" << o.seed
    << "\nrng=" << Rng::name() << '\n';
  write_text(dir / "manifest.txt", m.str());
  return ok;
}

// warp

int cmd_warp(const std::string& map_path, const std::string& input, const std::string& out)
{
  std::string kind;
  const auto disp = load_vector_field(map_path, &kind);
  if (!kind.empty() && kind != "displacement")
    throw UsageError(map_path + " is not a displacement map (kind=" + kind + ")");
  const DeformationMap map{disp.grid, disp};
  const fs::path dir(out);
  ensure_dir(dir);
  if (header_dtype(input) == "uint16") {
    const auto labels = load_labels(input);
    if (!(labels.grid == map.grid))
      throw UsageError("map and label grids differ");
    save_labels(warp_labels(labels, map), dir / "warped_labels.hdr");
  } else {
    const auto image = load_field(input);
    if (!(image.grid == map.grid))
      throw UsageError("map and image grids differ");
    save_field(warp_image(image, map), dir / "warped.hdr");
  }
  return ok;
}

// evaluate

int cmd_evaluate(const std::string& a_path, const std::string& b_path, const std::vector<unsigned>& requested,
                 const std::string& out)
{
  const auto a = load_labels(a_path);
  const auto b = load_labels(b_path);
  if (!(a.grid == b.grid))
    throw UsageError("label grids differ");
  std::set<unsigned> labels(requested.begin(), requested.end());
  if (labels.empty()) {
    for (unsigned l : a.labels)
      if (l)
        labels.insert(l);
    for (unsigned l : b.labels)
      if (l)
        labels.insert(l);
  }
  std::ostringstream csv;
  csv << "label,dsc\n";
  for (unsigned l : labels) {
    const double d = dice_coefficient(a, b, l);
    csv << l << ',' << format_double(d) << '\n';
    std::printf("label %u: dsc %s\n", l, format_double(d).c_str());
  }
  ensure_dir(out);
  write_text(fs::path(out) / "dsc.csv", csv.str());
  return ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"PDE-constrained LDDMM by geodesic shooting with Gauss-Newton-Krylov optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string out, config;
  std::uint64_t seed = 0;
  auto shared = [&](CLI::App* sub, bool out_required) {
    auto* o = sub->add_option("--out", out, "Output directory");
    if (out_required)
      o->required();
    sub->add_option("--seed", seed, "Seed for all random choices");
    sub->add_option("--config", config, "key=value config file; flags override it")->check(CLI::ExistingFile);
  };

  RegisterArgs ra;
  auto* reg = app.add_subcommand("register", "Register a source image to a target image");
  shared(reg, true);
  reg->add_option("--source", ra.source, "Source image header")->required();
  reg->add_option("--target", ra.target, "Target image header")->required();
  std::vector<std::string> variants;
  for (auto v : {Variant::pde_epdiff_gn_v, Variant::pde_epdiff_gn_l2, Variant::st_pde_lddmm_gn, Variant::epdiff_gd})
    variants.push_back(to_string(v));
  reg->add_option("--variant", ra.variant, "Optimization method")->check(CLI::IsMember(variants));
  reg->add_option("--iters", ra.iters, "Outer iterations")->check(CLI::PositiveNumber);
  reg->add_option("--nt", ra.nt, "Time steps")->check(CLI::PositiveNumber);
  reg->add_option("--alpha", ra.alpha, "Metric weight alpha")->check(CLI::PositiveNumber);
  reg->add_option("--s", ra.s, "Metric exponent s")->check(CLI::NonNegativeNumber);
  reg->add_option("--sigma", ra.sigma, "Image-weight parameter sigma")->check(CLI::PositiveNumber);
  reg->add_option("--transport", ra.transport, "Transport scheme")
      ->check(CLI::IsMember({"spectral", "semi-lagrangian"}));

  std::string preset;
  bool corrupt = false;
  auto* chk = app.add_subcommand("check-derivatives", "Run the derivative consistency suites");
  shared(chk, false);
  chk->add_option("--preset", preset, "small-2d or small-3d")->required();
  chk->add_flag("--corrupt-adjoint-sign", corrupt, "Flip the ad-dagger sign in the adjoint equations");

  std::string synth_name;
  SynthOptions so;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic image pair with labels");
  shared(syn, true);
  syn->add_option("--name", synth_name, "blobs, c2circle or bull")->required();
  syn->add_option("--n", so.n, "Voxels per axis")->check(CLI::Range(8, 1024));
  syn->add_option("--ndim", so.ndim, "2 or 3")->check(CLI::IsMember({2, 3}));
  syn->add_option("--shift", so.shift, "Blob shift in voxels");
  syn->add_option("--noise", so.noise, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);

  std::string map_path, input;
  auto* wrp = app.add_subcommand("warp", "Pull an image or label field back through an inverse map");
  shared(wrp, true);
  wrp->add_option("--map", map_path, "Displacement header (inverse_map.hdr)")->required();
  wrp->add_option("--input", input, "Image or label header")->required();

  std::string a_path, b_path;
  std::vector<unsigned> labels;
  auto* ev = app.add_subcommand("evaluate", "Per-label Dice overlap");
  shared(ev, true);
  ev->add_option("--warped", a_path, "Warped label header")->required();
  ev->add_option("--target", b_path, "Reference label header")->required();
  ev->add_option("--labels", labels, "Labels to score (default: all nonzero)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return usage;
  }

  try {
    if (*reg) {
      ra.out = out;
      ra.config = config;
      ra.seed = seed;
      return cmd_register(ra);
    }
    if (*chk)
      return cmd_check(preset, seed, corrupt, out);
    if (*syn) {
      so.seed = seed;
      return cmd_synth(synth_name, so, out);
    }
    if (*wrp)
      return cmd_warp(map_path, input, out);
    if (*ev)
      return cmd_evaluate(a_path, b_path, labels, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical;
  }
  return usage;
}
