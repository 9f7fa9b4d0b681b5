// whitham-lab: runs one experiment from a JSON config.
//
//   whitham-lab <experiment> [--config file.json] [--print-config] [--a.b value ...]
//
// Dotted options override config entries; values are parsed as JSON and fall
// back to plain strings. Exit status: 0 ok, 2 bad input, 3 numerical failure,
// 4 failed check.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "whitham/whitham.hpp"

namespace {

using whitham::json;

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok.rfind("--", 0) != 0 || tok.size() == 2) {
            throw whitham::ValidationError("unexpected argument '" + tok + "'");
        }
        const auto eq = tok.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(tok.substr(2, eq - 2), tok.substr(eq + 1));
        } else {
            if (i + 1 >= extras.size()) throw whitham::ValidationError("option '" + tok + "' needs a value");
            out.emplace_back(tok.substr(2), extras[++i]);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Whitham-type equation toolkit: symbol checks, pseudoproduct identities, energy and lifespan scans"};
    app.allow_extras();
    std::string experiment;
    std::string config_path;
    bool print_config = false;
    std::string names;
    for (const auto& n : whitham::experiment_names()) names += (names.empty() ? "" : ", ") + n;
    app.add_option("experiment", experiment, "one of: " + names)->required();
    app.add_option("--config", config_path, "JSON config file");
    app.add_flag("--print-config", print_config, "print the resolved config and exit");
    app.set_version_flag("--version", whitham::version);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        json doc = json::object();
        if (!config_path.empty()) {
            doc = json::parse(whitham::io::read_text(config_path), nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                throw whitham::ValidationError("'" + config_path + "' is not a JSON object");
            }
        }
        if (doc.contains("experiment") && doc["experiment"] != experiment) {
            throw whitham::ValidationError("config names experiment " + doc["experiment"].dump() +
                                           " but the command line asks for '" + experiment + "'");
        }
        doc["experiment"] = experiment;
        for (const auto& [path, value] : parse_overrides(app.remaining())) whitham::apply_override(doc, path, value);
        const auto cfg = whitham::ExperimentConfig::from_json(doc);
        if (print_config) {
            cfg.validate();
            std::cout << whitham::io::dump(cfg.to_json());
            return 0;
        }
        return whitham::run(cfg, std::cout, std::cerr);
    } catch (const whitham::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
