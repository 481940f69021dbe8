#include <string>
#include <vector>

#include "geoflow/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    geoflow::CliInvocation inv;
    int rc = geoflow::parse_command(args, inv);
    if (rc == -1) return 0;  // help
    if (rc != 0) return rc;
    return geoflow::main_dispatch(inv);
}
