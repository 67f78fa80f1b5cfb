#include "manifest.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "mfhawkes/cli.hpp"

namespace mfhawkes {

std::string git_blob_sha1(std::string_view content) {
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("SHA-1 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

namespace cli {

namespace {

Json scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") {  // quoted
        return s;
    }
    if (s.empty() || s == "~" || s == "null") {
        return nullptr;
    }
    if (s == "true" || s == "True") {
        return true;
    }
    if (s == "false" || s == "False") {
        return false;
    }
    if (s.find_first_not_of("0123456789") == std::string::npos) {
        try {
            return static_cast<std::uint64_t>(std::stoull(s));
        } catch (const std::out_of_range&) {
            return s;
        }
    }
    if (s[0] == '-' && s.size() > 1 && s.find_first_not_of("0123456789", 1) == std::string::npos) {
        try {
            return static_cast<std::int64_t>(std::stoll(s));
        } catch (const std::out_of_range&) {
            return s;
        }
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && std::isfinite(v)) {
            return v;
        }
    } catch (const std::exception&) {
    }
    return s;
}

}  // namespace

Json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            Json arr = Json::array();
            for (const auto& item : node) {
                arr.push_back(yaml_to_json(item));
            }
            return arr;
        }
        case YAML::NodeType::Map: {
            Json obj = Json::object();
            for (const auto& kv : node) {
                obj[kv.first.Scalar()] = yaml_to_json(kv.second);
            }
            return obj;
        }
    }
    return nullptr;
}

Json json_number(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v > 0 ? "inf" : "-inf";
}

Json make_manifest(const std::string& command, const Json& config, const std::string& base_dir,
                   const std::map<std::string, std::string>& inputs, const std::vector<OutputFile>& outputs) {
    Json m = Json::object();
    m["manifest_version"] = kManifestVersion;
    m["tool"] = "mfhawkes";
    m["command"] = command;
    m["seed"] = config.value("seed", Json(0));
    m["config"] = config;
    m["base_dir"] = base_dir;
    Json in = Json::object();
    for (const auto& [name, content] : inputs) {
        in[name] = git_blob_sha1(content);
    }
    m["inputs"] = in;
    Json out = Json::object();
    for (const auto& f : outputs) {
        out[f.name] = git_blob_sha1(f.content);
    }
    m["outputs"] = out;
    return m;
}

}  // namespace cli
}  // namespace mfhawkes
