#include "io.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace rcm4::tools {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string Manifest::to_string() const {
  std::ostringstream os;
  os << "# rcm4-manifest v1\n";
  for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
  for (const ManifestEntry& e : entries) os << e.sha256 << "  " << e.size << "  " << e.name << "\n";
  return os.str();
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "# rcm4-manifest v1") throw std::runtime_error("manifest: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) throw std::runtime_error("manifest: bad meta line");
      m.meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.sha256 >> e.size)) throw std::runtime_error("manifest: bad entry line");
    ls >> std::ws;
    std::getline(ls, e.name);
    if (e.sha256.size() != 64 || e.name.empty()) throw std::runtime_error("manifest: bad entry line");
    m.entries.push_back(e);
  }
  return m;
}

std::vector<std::string> Manifest::verify(const fs::path& dir) const {
  std::vector<std::string> bad;
  for (const ManifestEntry& e : entries) {
    const fs::path p = dir / e.name;
    if (!fs::exists(p) || fs::file_size(p) != e.size || sha256_file(p) != e.sha256) bad.push_back(e.name);
  }
  return bad;
}

OutputStage::OutputStage(fs::path out_dir) : out_(std::move(out_dir)) {
  fs::create_directories(out_);
  stage_ = out_ / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(stage_);
  fs::create_directories(stage_);
}

OutputStage::~OutputStage() {
  std::error_code ec;
  fs::remove_all(stage_, ec);
}

fs::path OutputStage::file(const std::string& name) {
  if (name.empty() || name.find("..") != std::string::npos || name.front() == '/') {
    throw std::invalid_argument("bad output name " + name);
  }
  names_.push_back(name);
  const fs::path p = stage_ / name;
  fs::create_directories(p.parent_path());
  return p;
}

void OutputStage::write(const std::string& name, std::string_view content) {
  write_file_atomic(file(name), content);
}

Manifest OutputStage::commit(const std::vector<std::pair<std::string, std::string>>& meta) {
  if (committed_) throw std::logic_error("output stage committed twice");
  Manifest m;
  m.meta = meta;
  for (const std::string& name : names_) {
    const fs::path src = stage_ / name;
    if (!fs::exists(src)) throw std::runtime_error("declared output " + name + " was not written");
    m.entries.push_back({sha256_file(src), fs::file_size(src), name});
  }
  for (const std::string& name : names_) {
    const fs::path dst = out_ / name;
    fs::create_directories(dst.parent_path());
    fs::rename(stage_ / name, dst);
  }
  write_file_atomic(out_ / kManifestName, m.to_string());
  committed_ = true;
  return m;
}

fs::path default_output_root() {
  if (const char* env = std::getenv("RCM4_OUT"); env && *env) return env;
  return "rcm4-out";
}

}  // namespace rcm4::tools
