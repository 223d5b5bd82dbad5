#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "physgrid/errors.hpp"

namespace physgrid::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256: digest init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    char b[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = std::move(argv);
    doc_["seeds"] = nlohmann::json::object();
    doc_["details"] = nlohmann::json::object();
    doc_["timings_seconds"] = nlohmann::json::object();
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) {
    auto files = [](const std::vector<std::filesystem::path>& paths) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& p : paths) j.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
        return j;
    };
    doc_["inputs"] = files(inputs_);
    doc_["outputs"] = files(outputs_);
    doc_["timings_seconds"]["total"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto path = dir / "manifest.json";
    write_text(path, doc_.dump(2) + "\n");
    return path;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace physgrid::cli
