#include "gensep/cli.hpp"
#include "gensep/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"Separating-set estimation for generalizing experimental estimates to a target population"};
    app.footer("Exit codes: 0 ok, 1 bad config or data, 2 numerical failure, 3 infeasible separating set.\n"
               "Every option except --config may also be given as 'key = value' in the config file.");

    std::string command;
    std::string config_path;
    app.add_option("command", command, "estimate | graph | simulate")
        ->required()
        ->check(CLI::IsMember({"estimate", "graph", "simulate"}));
    app.add_option("--config", config_path, "config file of key = value lines");

    std::map<std::string, std::string> overrides;
    for (const auto& key : gensep::config_keys()) {
        const std::string name = key.name;
        const std::string flag = name.size() == 1 ? "-" + name : "--" + name;
        app.add_option(flag, overrides[name], key.description);
    }

    CLI11_PARSE(app, argc, argv);

    gensep::RunConfig config;
    try {
        if (!config_path.empty()) config = gensep::load_config(config_path);
        for (const auto& key : gensep::config_keys()) {
            auto* opt = app.get_option(std::string(key.name).size() == 1 ? "-" + std::string(key.name)
                                                                          : "--" + std::string(key.name));
            if (opt->count() > 0) gensep::apply_setting(config, key.name, overrides[key.name]);
        }
    } catch (const gensep::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return gensep::kExitInput;
    }
    return gensep::run_command(command, config, std::cout, std::cerr);
}
