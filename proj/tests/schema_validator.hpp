#pragma once

// Minimal structural JSON Schema checker covering exactly the keyword subset
// used by the schemas shipped under schemas/: type (string or list), const,
// enum, required, properties, additionalProperties (boolean or schema),
// items (single schema), oneOf, and whole-document $ref resolved against a
// registry of loaded schema files. Returns an error path + message string,
// empty when the document validates.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace testing::schema {

using json = nlohmann::json;

class Registry {
 public:
  // Loads every *.json file in `dir`, keyed by filename (which matches the
  // files' "$id" values).
  explicit Registry(const std::string& dir) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      if (!in) throw std::runtime_error("cannot read " + entry.path().string());
      docs_[entry.path().filename().string()] = json::parse(in);
    }
    if (docs_.empty()) throw std::runtime_error("no schemas found in " + dir);
  }

  const json& doc(const std::string& id) const {
    auto it = docs_.find(id);
    if (it == docs_.end()) throw std::runtime_error("unknown schema \"" + id + "\"");
    return it->second;
  }

  // Empty string when `value` conforms to the schema named `id`.
  std::string check(const json& value, const std::string& id) const {
    return check_node(value, doc(id), "$");
  }

 private:
  static bool type_matches(const json& value, const std::string& name) {
    if (name == "object") return value.is_object();
    if (name == "array") return value.is_array();
    if (name == "string") return value.is_string();
    if (name == "integer") return value.is_number_integer();
    if (name == "number") return value.is_number();
    if (name == "boolean") return value.is_boolean();
    if (name == "null") return value.is_null();
    throw std::runtime_error("unsupported type name \"" + name + "\"");
  }

  std::string check_node(const json& value, const json& schema,
                         const std::string& path) const {
    if (schema.contains("$ref")) {
      return check_node(value, doc(schema["$ref"].get<std::string>()), path);
    }
    if (schema.contains("oneOf")) {
      std::size_t passed = 0;
      std::string last_error;
      for (const json& branch : schema["oneOf"]) {
        std::string err = check_node(value, branch, path);
        if (err.empty())
          ++passed;
        else
          last_error = err;
      }
      if (passed != 1) {
        std::ostringstream os;
        os << path << ": " << passed << " of " << schema["oneOf"].size()
           << " oneOf branches matched";
        if (passed == 0) os << " (last: " << last_error << ")";
        return os.str();
      }
    }
    if (schema.contains("type")) {
      const json& t = schema["type"];
      bool ok = false;
      if (t.is_string()) {
        ok = type_matches(value, t.get<std::string>());
      } else {
        for (const json& name : t) ok = ok || type_matches(value, name.get<std::string>());
      }
      if (!ok) return path + ": type mismatch (got " + std::string(value.type_name()) + ")";
    }
    if (schema.contains("const") && value != schema["const"]) {
      return path + ": does not equal the const value";
    }
    if (schema.contains("enum")) {
      bool ok = false;
      for (const json& allowed : schema["enum"]) ok = ok || value == allowed;
      if (!ok) return path + ": value not in enum";
    }
    if (value.is_object()) {
      if (schema.contains("required")) {
        for (const json& key : schema["required"]) {
          if (!value.contains(key.get<std::string>())) {
            return path + ": missing required key \"" + key.get<std::string>() + "\"";
          }
        }
      }
      const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
      for (const auto& [key, member] : value.items()) {
        if (props && props->contains(key)) {
          std::string err = check_node(member, (*props)[key], path + "." + key);
          if (!err.empty()) return err;
        } else if (schema.contains("additionalProperties")) {
          const json& extra = schema["additionalProperties"];
          if (extra.is_boolean()) {
            if (!extra.get<bool>()) return path + ": unexpected key \"" + key + "\"";
          } else {
            std::string err = check_node(member, extra, path + "." + key);
            if (!err.empty()) return err;
          }
        }
      }
    }
    if (value.is_array() && schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        std::string err =
            check_node(value[i], schema["items"], path + "[" + std::to_string(i) + "]");
        if (!err.empty()) return err;
      }
    }
    return "";
  }

  std::map<std::string, json> docs_;
};

inline const Registry& shipped_schemas() {
  static Registry registry(DSCLUST_SCHEMA_DIR);
  return registry;
}

}  // namespace testing::schema
