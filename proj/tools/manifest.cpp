#include "manifest.hpp"

#include "othr/io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <memory>

namespace othr::cli {

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx) throw std::runtime_error("cannot allocate a digest context");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(io::read_text(path)); }

void write_manifest(const RunManifest& m) {
    auto files = [](const std::vector<std::string>& paths) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
        return arr;
    };
    nlohmann::ordered_json j;
    j["subcommand"] = m.subcommand;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["out"] = m.out_dir;
    j["inputs"] = files(m.inputs);
    j["outputs"] = files(m.outputs);
    io::write_text((std::filesystem::path(m.out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
    const auto j = nlohmann::json::parse(io::read_text(manifest_path));
    std::vector<std::string> changed;
    for (const auto& entry : j.at("inputs")) {
        const std::string path = entry.at("path").get<std::string>();
        try {
            if (sha256_file(path) != entry.at("sha256").get<std::string>()) changed.push_back(path);
        } catch (const io::IoError&) {
            changed.push_back(path);
        }
    }
    return changed;
}

}  // namespace othr::cli
