#include "tempsteer/cli.hpp"

int main(int argc, char ** argv) {
    return tempsteer::cli::dispatch(argc, argv);
}
