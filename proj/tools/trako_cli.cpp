// trako: compress, restore, compare and synthesize tractograms.
//
// Exit codes: 0 ok, 1 unreadable/corrupt input or I/O failure, 2 bad flags,
// 3 lossy conversion refused by --strict, 4 topology mismatch.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trako/codec.hpp"
#include "trako/container.hpp"
#include "trako/error.hpp"
#include "trako/generator.hpp"
#include "trako/io_formats.hpp"
#include "trako/metrics.hpp"

namespace fs = std::filesystem;
using namespace trako;

namespace {

enum Exit { kOk = 0, kInputError = 1, kUsageError = 2, kStrictRefusal = 3, kTopologyMismatch = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExitWith {
  int code;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

/// Output format from an explicit --format value, else from the extension.
io::FormatTag output_format(const std::string& format, bool ascii, const fs::path& out) {
  std::string f = format;
  if (f.empty()) {
    const auto ext = lower_extension(out);
    if (ext == ".tck") f = "tck";
    else if (ext == ".trk") f = "trk";
    else if (ext == ".vtk") f = "vtk";
    else throw UsageError("cannot infer output format from '" + out.string() + "'; pass --format tck|trk|vtk");
  }
  if (f == "tck") return io::FormatTag::TCK;
  if (f == "trk") return io::FormatTag::TRK;
  if (f == "vtk") return ascii ? io::FormatTag::VTK_LEGACY_ASCII : io::FormatTag::VTK_LEGACY_BINARY;
  throw UsageError("unknown --format '" + f + "'; expected tck, trk or vtk");
}

struct Loaded {
  std::vector<std::uint8_t> bytes;
  io::FormatTag tag;
};

Loaded load(const fs::path& path) {
  Loaded l;
  l.bytes = io::read_file(path);
  l.tag = io::detect_format(l.bytes, path.string());
  return l;
}

bool is_tko(io::FormatTag tag) { return tag == io::FormatTag::TKO_JSON || tag == io::FormatTag::TKO_BINARY; }

void print_warnings(const io::Warnings& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Keeps only fields present in both tractograms so attribute errors can be
// computed after a conversion that dropped some.
void intersect_fields(OrderedMap<AttributeField>& a, OrderedMap<AttributeField>& b, const char* kind) {
  std::vector<std::string> drop;
  for (const auto& [name, f] : a) {
    if (!b.contains(name)) drop.push_back(name);
  }
  for (const auto& [name, f] : b) {
    if (!a.contains(name)) drop.push_back(name);
  }
  for (const auto& name : drop) {
    std::cerr << "note: " << kind << " '" << name << "' exists in only one input; not compared\n";
    a.erase(name);
    b.erase(name);
  }
}

int run_trakofy(const fs::path& input, fs::path output, int bits, int level, bool binary, bool no_scalars,
                bool no_properties, bool uncompressed) {
  codec::CodecConfig config;
  config.bits = bits;
  config.compression_level = level;
  try {
    config.check();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto in = load(input);
  if (is_tko(in.tag)) throw Error(Errc::UnknownFormat, "input is already a .tko container; expected TCK, TRK or VTK");
  io::Warnings warnings;

  const auto start = Clock::now();
  Tractogram t = io::read_tractogram(in.bytes, in.tag, &warnings);
  if (no_scalars) t.vertex_scalars = {};
  if (no_properties) t.fiber_properties = {};
  const auto doc =
      container::build_document(t, uncompressed ? std::nullopt : std::optional<codec::CodecConfig>(config));
  const auto bytes = binary ? container::write_tko_binary(doc) : container::write_tko_json(doc);
  const double elapsed = ms_since(start);
  print_warnings(warnings);

  if (output.empty()) output = fs::path(input).replace_extension(".tko");
  io::write_file(output, bytes);
  const double ratio = metrics::compression_ratio(static_cast<double>(in.bytes.size()), static_cast<double>(bytes.size()));
  const double factor = metrics::compression_factor(static_cast<double>(in.bytes.size()), static_cast<double>(bytes.size()));
  std::printf("%s (%s, %zu B) -> %s (%s, %zu B): C_r %.2f %%, C_f %.3fx, %.1f ms\n", input.string().c_str(),
              std::string(io::to_string(in.tag)).c_str(), in.bytes.size(), output.string().c_str(),
              binary ? "TKO_BINARY" : "TKO_JSON", bytes.size(), ratio, factor, elapsed);
  return kOk;
}

int run_untrakofy(const fs::path& input, const fs::path& output, const std::string& format, bool ascii, bool strict) {
  const auto tag = output_format(format, ascii, output);
  const auto in = load(input);
  if (!is_tko(in.tag)) {
    throw Error(Errc::NotATrakoFile, "expected a .tko container, found " + std::string(io::to_string(in.tag)));
  }
  const Tractogram t = container::parse_document(container::read_tko(in.bytes));
  io::Warnings warnings;
  const auto bytes = io::write_tractogram(t, tag, &warnings);
  if (!warnings.empty() && strict) {
    print_warnings(warnings);
    std::cerr << "error: refusing lossy conversion to " << io::to_string(tag) << " (--strict)\n";
    return kStrictRefusal;
  }
  print_warnings(warnings);
  io::write_file(output, bytes);
  std::printf("%s -> %s (%s, %zu streamlines, %zu vertices)\n", input.string().c_str(), output.string().c_str(),
              std::string(io::to_string(tag)).c_str(), t.streamline_count(), t.vertex_count());
  return kOk;
}

int run_tkompare(const fs::path& original_path, const fs::path& restored_path, int bins, const fs::path& report_path,
                 bool json) {
  if (bins < 2) throw UsageError("--bins must be at least 2");
  const auto orig = load(original_path);
  const auto rest = load(restored_path);
  if (is_tko(orig.tag)) throw Error(Errc::UnknownFormat, "the original must be TCK, TRK or VTK, not a .tko container");

  Tractogram original = io::read_tractogram(orig.bytes, orig.tag);
  Tractogram restored;
  double encode_ms = 0.0, decode_ms = 0.0;
  if (is_tko(rest.tag)) {
    auto start = Clock::now();
    const auto doc = container::read_tko(rest.bytes);
    restored = container::parse_document(doc);
    decode_ms = ms_since(start);
    // Re-run the encoder with the stored settings to time it.
    Tractogram source = original;
    intersect_fields(source.vertex_scalars, restored.vertex_scalars, "scalar");
    intersect_fields(source.fiber_properties, restored.fiber_properties, "property");
    start = Clock::now();
    const auto redo = container::build_document(source, container::document_config(doc));
    (void)(rest.tag == io::FormatTag::TKO_BINARY ? container::write_tko_binary(redo) : container::write_tko_json(redo));
    encode_ms = ms_since(start);
    original = std::move(source);
  } else {
    restored = io::read_tractogram(rest.bytes, rest.tag);
    intersect_fields(original.vertex_scalars, restored.vertex_scalars, "scalar");
    intersect_fields(original.fiber_properties, restored.fiber_properties, "property");
  }

  auto report = metrics::compare(original, restored, orig.bytes.size(), rest.bytes.size(), bins);
  report.encode_ms = encode_ms;
  report.decode_ms = decode_ms;
  if (json) {
    std::cout << metrics::to_json(report).dump(2) << "\n";
  } else {
    std::cout << metrics::format_table(report);
  }
  if (!report_path.empty()) {
    const std::string text = metrics::to_json(report).dump(2) + "\n";
    io::write_file(report_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  return kOk;
}

int run_gen(const gen::GeneratorConfig& config, const fs::path& output, const std::string& format, bool ascii) {
  try {
    config.check();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto tag = output_format(format, ascii, output);
  const Tractogram t = gen::generate(config);
  io::Warnings warnings;
  const auto bytes = io::write_tractogram(t, tag, &warnings);
  print_warnings(warnings);
  io::write_file(output, bytes);
  std::printf("%s (%s): %zu streamlines, %zu vertices\n", output.string().c_str(),
              std::string(io::to_string(tag)).c_str(), t.streamline_count(), t.vertex_count());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed tractography container tools"};
  app.require_subcommand(1);

  std::string input, output, original, restored, format, report;
  int bits = 14, level = 10, bins = metrics::kDefaultBins;
  bool binary = false, no_scalars = false, no_properties = false, uncompressed = false, strict = false, ascii = false,
       json = false;
  gen::GeneratorConfig gen_config;

  auto* trakofy = app.add_subcommand("trakofy", "Compress a TCK/TRK/VTK file into a .tko container");
  trakofy->add_option("input", input, "Input tractogram")->required();
  trakofy->add_option("-o,--output", output, "Output .tko (default: input with .tko extension)");
  trakofy->add_option("--bits", bits, "Quantization bits, 1-31");
  trakofy->add_option("--level", level, "Compression level, 0-10");
  trakofy->add_flag("--binary", binary, "Write GLB instead of JSON");
  trakofy->add_flag("--no-scalars", no_scalars, "Drop per-vertex scalars");
  trakofy->add_flag("--no-properties", no_properties, "Drop per-streamline properties");
  trakofy->add_flag("--uncompressed", uncompressed, "Store raw values (lossless)");

  auto* untrakofy = app.add_subcommand("untrakofy", "Restore a .tko container to TCK/TRK/VTK");
  untrakofy->add_option("input", input, "Input .tko")->required();
  untrakofy->add_option("-o,--output", output, "Output file")->required();
  untrakofy->add_option("--format", format, "tck, trk or vtk (default: from the output extension)");
  untrakofy->add_flag("--ascii", ascii, "Write VTK as ASCII instead of binary");
  untrakofy->add_flag("--strict", strict, "Fail instead of dropping data the target format cannot hold");

  auto* tkompare = app.add_subcommand("tkompare", "Compare an original tractogram with its restored version");
  tkompare->add_option("original", original, "Original TCK/TRK/VTK")->required();
  tkompare->add_option("restored", restored, "Restored file or .tko container")->required();
  tkompare->add_option("--bins", bins, "Histogram bins for the Bhattacharyya score");
  tkompare->add_option("--report", report, "Write the report as JSON to this path");
  tkompare->add_flag("--json", json, "Print the JSON report instead of the table");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic tractogram");
  gen->add_option("-o,--output", output, "Output file")->required();
  gen->add_option("--streamlines", gen_config.streamlines, "Number of streamlines");
  gen->add_option("--points", gen_config.points, "Vertices per streamline");
  gen->add_option("--box", gen_config.box, "Edge of the bounding cube, mm");
  gen->add_option("--step", gen_config.step, "Step length, mm, at most 1");
  gen->add_option("--scalars", gen_config.scalars, "Per-vertex scalar fields");
  gen->add_option("--properties", gen_config.properties, "Per-streamline property fields");
  gen->add_option("--seed", gen_config.seed, "Random seed");
  gen->add_option("--format", format, "tck, trk or vtk (default: from the output extension)");
  gen->add_flag("--ascii", ascii, "Write VTK as ASCII instead of binary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  std::string current;  // file being processed, for diagnostics
  try {
    if (*trakofy) {
      current = input;
      return run_trakofy(input, output, bits, level, binary, no_scalars, no_properties, uncompressed);
    }
    if (*untrakofy) {
      current = input;
      return run_untrakofy(input, output, format, ascii, strict);
    }
    if (*tkompare) {
      current = original + ", " + restored;
      return run_tkompare(original, restored, bins, report, json);
    }
    current = output;
    return run_gen(gen_config, output, format, ascii);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << current << ": " << e.what() << "\n";
    switch (e.code()) {
      case Errc::TopologyMismatch:
      case Errc::StreamlineCountMismatch:
        return kTopologyMismatch;
      default:
        return kInputError;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << current << ": " << e.what() << "\n";
    return kInputError;
  }
}
