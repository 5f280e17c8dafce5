// Acceptance suite: one pass/fail line per criterion. Placeholder while the
// library stabilizes; filled in below.
#include <cstdio>

int main() {
    std::printf("acceptance: placeholder\n");
    return 1;
}
