from rankaudit.cli import main

main()
