#include "glb/cli.hpp"

int main(int argc, char** argv)
{
    return glb::cli::main(argc, argv);
}
